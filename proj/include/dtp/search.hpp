#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dtp/chain.hpp"
#include "dtp/mdp.hpp"

namespace dtp {

/// Least superset of `init` closed under positive-probability successors of
/// every action.
StateSet reachable_set(const FlatMdp& mdp, const StateSet& init);

/// Sub-MDP over `keep` (state names are preserved). Throws Leakage naming
/// the first (state, action) whose row leaves the set.
FlatMdp restrict_mdp(const FlatMdp& mdp, const StateSet& keep);

using Heuristic = std::function<double(std::size_t)>;

struct StateNode;

struct ActionNode {
  std::size_t action = 0;
  double value = 0.0;
  std::vector<std::pair<double, StateNode>> outcomes;  // (probability, child)
};

struct StateNode {
  std::size_t state = 0;
  std::size_t depth = 0;  // tree depth; decision stages alternate with chance stages
  double value = 0.0;
  std::vector<ActionNode> children;
};

struct SearchResult {
  double value = 0.0;
  std::optional<std::size_t> action;  // empty at depth 0
  std::optional<StateNode> tree;      // present when requested
  std::size_t nodes = 0;              // state nodes expanded
};

/// Depth-limited expectimax with rollback. Leaves are valued by R or the
/// heuristic; interior state nodes by R(s) + max_a {C(a,s) + sum p V}.
SearchResult expectimax(const FlatMdp& mdp, std::size_t s, std::size_t depth,
                        const Heuristic& heuristic = {}, bool keep_tree = false);

struct ExecuteOptions {
  /// Search no deeper than the number of steps still to run.
  bool shrink_to_remaining = false;
};

/// Search, act, observe the sampled outcome, repeat from the realized state.
Trajectory plan_execute_loop(const FlatMdp& mdp, std::size_t s0, std::size_t search_depth,
                             std::size_t steps, std::uint64_t seed,
                             const Heuristic& heuristic = {},
                             const ExecuteOptions& options = {});

}  // namespace dtp
