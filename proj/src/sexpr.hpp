#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dtp::detail {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
  /// True for a list whose first item is the atom `head`.
  bool headed(std::string_view head) const {
    return is_list && !items.empty() && items[0].is_atom(head);
  }
};

/// Reads every top-level expression; ';' and '#' start comments. Throws
/// ParseError on unbalanced parentheses.
std::vector<SExpr> read_sexprs(std::string_view text);

}  // namespace dtp::detail
