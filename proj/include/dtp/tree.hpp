#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "dtp/error.hpp"

namespace dtp {

/// A node test: a pre-state variable, or (for CPTs with synchronic arcs) a
/// post-state variable.
struct VarTest {
  std::size_t var = 0;
  bool post = false;
  auto operator<=>(const VarTest&) const = default;
};

/// Assignments along a root-to-node path.
class PathContext {
 public:
  std::optional<int> lookup(VarTest t) const {
    for (const auto& [test, value] : fixed_)
      if (test == t) return value;
    return std::nullopt;
  }
  PathContext with(VarTest t, int value) const {
    PathContext c = *this;
    c.fixed_.emplace_back(t, value);
    return c;
  }
  const std::vector<std::pair<VarTest, int>>& entries() const { return fixed_; }

 private:
  std::vector<std::pair<VarTest, int>> fixed_;
};

/// Immutable multiway decision tree. Interior nodes test one variable and
/// carry one child per domain value (else-branches are a text-format
/// convenience and are expanded on parse). Subtrees are shared.
template <class L>
class DecisionTree {
 public:
  using Leaf = L;

  DecisionTree() : DecisionTree(leaf(L{})) {}

  static DecisionTree leaf(L value) {
    return DecisionTree(std::make_shared<const Node>(Node{std::move(value), {}, {}}));
  }

  static DecisionTree node(VarTest test, std::vector<DecisionTree> children) {
    if (children.empty())
      throw Error(ErrorKind::MalformedTree, "interior node without branches");
    return DecisionTree(
        std::make_shared<const Node>(Node{std::nullopt, test, std::move(children)}));
  }

  bool is_leaf() const { return node_->payload.has_value(); }
  const L& payload() const { return *node_->payload; }
  VarTest test() const { return node_->test; }
  const std::vector<DecisionTree>& children() const { return node_->children; }
  const DecisionTree& child(std::size_t value) const { return node_->children.at(value); }

  /// Follows the path selected by the assignment. `post` is consulted only
  /// for post-state tests.
  const L& evaluate(std::span<const int> pre, std::span<const int> post = {}) const {
    const DecisionTree* t = this;
    while (!t->is_leaf()) {
      const auto test = t->test();
      const auto& values = test.post ? post : pre;
      if (test.var >= values.size())
        throw Error(ErrorKind::MalformedTree, "tree tests an unassigned variable");
      const int v = values[test.var];
      if (v < 0 || static_cast<std::size_t>(v) >= t->children().size())
        throw Error(ErrorKind::MalformedTree, "no branch for value index " + std::to_string(v));
      t = &t->children()[static_cast<std::size_t>(v)];
    }
    return t->payload();
  }

  bool same_node(const DecisionTree& other) const { return node_ == other.node_; }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) {
    if (a.node_ == b.node_) return true;
    if (a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf()) return a.payload() == b.payload();
    return a.test() == b.test() && a.children() == b.children();
  }

 private:
  struct Node {
    std::optional<L> payload;
    VarTest test;
    std::vector<DecisionTree> children;
  };

  explicit DecisionTree(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

template <class L>
std::size_t leaf_count(const DecisionTree<L>& t) {
  if (t.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : t.children()) n += leaf_count(c);
  return n;
}

template <class L>
std::size_t tree_depth(const DecisionTree<L>& t) {
  if (t.is_leaf()) return 0;
  std::size_t d = 0;
  for (const auto& c : t.children()) d = std::max(d, tree_depth(c));
  return d + 1;
}

/// Replaces every node testing `test` by its `value` branch.
template <class L>
DecisionTree<L> restrict_tree(const DecisionTree<L>& t, VarTest test, int value) {
  if (t.is_leaf()) return t;
  if (t.test() == test) return restrict_tree(t.child(static_cast<std::size_t>(value)), test, value);
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.children().size());
  bool changed = false;
  for (const auto& c : t.children()) {
    kids.push_back(restrict_tree(c, test, value));
    changed = changed || !kids.back().same_node(c);
  }
  return changed ? DecisionTree<L>::node(t.test(), std::move(kids)) : t;
}

template <class L>
DecisionTree<L> restrict_tree(const DecisionTree<L>& t, const PathContext& ctx) {
  DecisionTree<L> out = t;
  for (const auto& [test, value] : ctx.entries()) out = restrict_tree(out, test, value);
  return out;
}

namespace detail {

template <class L>
DecisionTree<L> simplify_under(const DecisionTree<L>& t, const PathContext& ctx) {
  if (t.is_leaf()) return t;
  if (auto fixed = ctx.lookup(t.test()))
    return simplify_under(t.child(static_cast<std::size_t>(*fixed)), ctx);
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.children().size());
  for (std::size_t v = 0; v < t.children().size(); ++v)
    kids.push_back(simplify_under(t.children()[v], ctx.with(t.test(), static_cast<int>(v))));
  bool all_equal = true;
  for (std::size_t v = 1; v < kids.size() && all_equal; ++v) all_equal = kids[v] == kids[0];
  if (all_equal) return kids[0];
  return DecisionTree<L>::node(t.test(), std::move(kids));
}

}  // namespace detail

/// Drops tests repeated along a path and collapses nodes whose branches are
/// all identical. The represented function is unchanged.
template <class L>
DecisionTree<L> simplify(const DecisionTree<L>& t) {
  return detail::simplify_under(t, PathContext{});
}

template <class L>
bool is_simplified(const DecisionTree<L>& t) {
  return simplify(t) == t;
}

template <class L, class F>
auto map_leaves(const DecisionTree<L>& t, F&& f)
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const L&>>> {
  using M = std::decay_t<std::invoke_result_t<F&, const L&>>;
  if (t.is_leaf()) return DecisionTree<M>::leaf(f(t.payload()));
  std::vector<DecisionTree<M>> kids;
  kids.reserve(t.children().size());
  for (const auto& c : t.children()) kids.push_back(map_leaves(c, f));
  return DecisionTree<M>::node(t.test(), std::move(kids));
}

/// Replaces each leaf by the subtree f(context, payload), where the context
/// holds the assignments on the path to that leaf.
template <class M, class L, class F>
DecisionTree<M> graft_leaves(const DecisionTree<L>& t, F&& f, const PathContext& ctx = {}) {
  if (t.is_leaf()) return f(ctx, t.payload());
  std::vector<DecisionTree<M>> kids;
  kids.reserve(t.children().size());
  for (std::size_t v = 0; v < t.children().size(); ++v)
    kids.push_back(graft_leaves<M>(t.children()[v], f, ctx.with(t.test(), static_cast<int>(v))));
  return DecisionTree<M>::node(t.test(), std::move(kids));
}

template <class L, class F>
void for_each_leaf(const DecisionTree<L>& t, F&& f, const PathContext& ctx = {}) {
  if (t.is_leaf()) {
    f(ctx, t.payload());
    return;
  }
  for (std::size_t v = 0; v < t.children().size(); ++v)
    for_each_leaf(t.children()[v], f, ctx.with(t.test(), static_cast<int>(v)));
}

/// Pointwise combination: the result evaluates to f(a(s), b(s)) everywhere.
/// The result is not simplified.
template <class A, class B, class F>
auto apply_trees(const DecisionTree<A>& a, const DecisionTree<B>& b, F&& f)
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const A&, const B&>>> {
  using R = std::decay_t<std::invoke_result_t<F&, const A&, const B&>>;
  if (a.is_leaf() && b.is_leaf()) return DecisionTree<R>::leaf(f(a.payload(), b.payload()));
  std::vector<DecisionTree<R>> kids;
  if (!a.is_leaf()) {
    kids.reserve(a.children().size());
    for (std::size_t v = 0; v < a.children().size(); ++v)
      kids.push_back(apply_trees(a.children()[v], restrict_tree(b, a.test(), static_cast<int>(v)), f));
    return DecisionTree<R>::node(a.test(), std::move(kids));
  }
  kids.reserve(b.children().size());
  for (std::size_t v = 0; v < b.children().size(); ++v)
    kids.push_back(apply_trees(a, b.children()[v], f));
  return DecisionTree<R>::node(b.test(), std::move(kids));
}

/// Variables tested anywhere, in depth-first first-encounter order.
template <class L>
std::vector<VarTest> tested_variables(const DecisionTree<L>& t) {
  std::vector<VarTest> out;
  std::function<void(const DecisionTree<L>&)> walk = [&](const DecisionTree<L>& n) {
    if (n.is_leaf()) return;
    bool seen = false;
    for (const auto& v : out) seen = seen || v == n.test();
    if (!seen) out.push_back(n.test());
    for (const auto& c : n.children()) walk(c);
  };
  walk(t);
  return out;
}

}  // namespace dtp
