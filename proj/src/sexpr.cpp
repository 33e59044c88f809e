#include "sexpr.hpp"

#include <cctype>

#include "dtp/io.hpp"

namespace dtp::detail {

std::vector<SExpr> read_sexprs(std::string_view text) {
  std::size_t line = 1, column = 1, i = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    ++i;
  };

  std::vector<SExpr> top;
  std::vector<SExpr> stack;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ';' || c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == '(') {
      SExpr list;
      list.is_list = true;
      list.line = line;
      list.column = column;
      stack.push_back(std::move(list));
      advance();
    } else if (c == ')') {
      if (stack.empty()) throw ParseError({{line, column, "unmatched ')'"}});
      advance();
      SExpr done = std::move(stack.back());
      stack.pop_back();
      (stack.empty() ? top : stack.back().items).push_back(std::move(done));
    } else {
      SExpr atom;
      atom.line = line;
      atom.column = column;
      while (i < text.size() && text[i] != '(' && text[i] != ')' && text[i] != ';' &&
             text[i] != '#' && !std::isspace(static_cast<unsigned char>(text[i]))) {
        atom.atom += text[i];
        advance();
      }
      (stack.empty() ? top : stack.back().items).push_back(std::move(atom));
    }
  }
  if (!stack.empty())
    throw ParseError({{stack.back().line, stack.back().column, "unclosed '('"}});
  return top;
}

}  // namespace dtp::detail
