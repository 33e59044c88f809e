#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dtp/mdp.hpp"
#include "dtp/solvers.hpp"

namespace dtp {

/// Disjoint, exhaustive grouping of flat states. Members are sorted and
/// blocks are ordered by their smallest member.
struct Partition {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::string> labels;  // optional, one per block when present

  std::size_t size() const { return blocks.size(); }
  /// Block index of every state.
  std::vector<std::size_t> block_of(std::size_t num_states) const;
  bool operator==(const Partition&) const = default;
};

bool is_partition(const Partition& p, std::size_t num_states);

/// Blocks of equal reward and equal per-action cost.
Partition initial_reward_partition(const FlatMdp& mdp, double tol = 0.0);

/// Probability mass from `state` into each block under `action`.
std::vector<double> block_transition(const FlatMdp& mdp, std::size_t action,
                                     std::size_t state,
                                     const std::vector<std::size_t>& block_of,
                                     std::size_t num_blocks);

/// Coarsest stable refinement: states stay together only while their block
/// transition probabilities agree within tol under every action.
Partition refine_partition(const FlatMdp& mdp, const Partition& initial, double tol);

bool is_stable(const FlatMdp& mdp, const Partition& p, double tol);

/// Aggregate MDP over the blocks; the first member of each block stands for
/// it. Throws Stability on an unstable partition.
FlatMdp quotient(const FlatMdp& mdp, const Partition& p, double tol = 1e-12);

struct LiftedSolution {
  StationaryPolicy policy;
  ValueFunction values;
};

LiftedSolution lift_solution(const StationarySolution& sol, const Partition& p,
                             std::size_t num_states);

}  // namespace dtp
