#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "dtp/factored.hpp"
#include "dtp/tree.hpp"

namespace dtp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double span() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

using ValueTree = ScalarTree;
using IntervalTree = DecisionTree<Interval>;
/// Leaves are action indices into FactoredMdp::actions.
using PolicyTree = DecisionTree<std::size_t>;

/// Post-state distributions of the variables a value tree tests, one factor
/// per variable. Variables whose value cannot matter on a branch are absent.
using Joint = std::vector<std::pair<std::size_t, Distribution>>;
using JointTree = DecisionTree<Joint>;

/// Regresses the variables tested by `vtree` through a simple net.
JointTree pregress(const ValueTree& vtree, const TwoSliceNet& action);

/// Expected value of `vtree` under a leaf joint.
double expected_value(const ValueTree& vtree, const Joint& joint);

/// Sum of additive reward components as one simplified tree.
ValueTree reward_tree(std::span<const ScalarTree> components);

/// R + C(a) + gamma * E[V(s')], simplified.
ValueTree q_tree(const TwoSliceNet& action, const ValueTree& vtree, double gamma,
                 std::span<const ScalarTree> reward);

struct MergedTrees {
  ValueTree value;
  PolicyTree policy;
};

/// Pointwise max over Q-trees indexed by action; the lowest index wins ties.
MergedTrees max_merge_trees(std::span<const ValueTree> qtrees);

/// Sup over states of |a - b|.
double tree_distance(const ValueTree& a, const ValueTree& b);

struct DiscountedStop {
  double gamma = 0.9;
  double eps = 1e-6;
};

using SviStop = std::variant<FiniteHorizon, DiscountedStop>;

struct SviResult {
  ValueTree value;
  PolicyTree policy;
  std::size_t iterations = 0;
  double residual = 0.0;                 // discounted mode only
  std::vector<std::size_t> leaf_counts;  // value-tree leaves after each iteration
};

/// Throws UnsupportedStructure when an action is a PSO or a net with
/// synchronic arcs.
SviResult structured_value_iteration(const FactoredMdp& fmdp, const SviStop& stop);

struct MaxLeaves {
  std::size_t n = 1;
};
struct MaxSpan {
  double delta = 0.0;
};
using PruneBudget = std::variant<MaxLeaves, MaxSpan>;

struct PrunedTree {
  IntervalTree tree;
  double max_span = 0.0;
};

IntervalTree to_interval_tree(const ValueTree& t);

/// Greedily collapses the all-leaf sibling group with the smallest merged span
/// until the budget holds.
PrunedTree prune_value_tree(const IntervalTree& t, const PruneBudget& budget);
PrunedTree prune_value_tree(const ValueTree& t, const PruneBudget& budget);

ValueTree midpoint_tree(const IntervalTree& t);

}  // namespace dtp
