#include "dtp/minimization.hpp"

#include <algorithm>
#include <cmath>

#include "dtp/error.hpp"

namespace dtp {
namespace {

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

// Splits each block into groups whose signatures match the group's first
// member within tol.
template <class Signature>
Partition split_blocks(const Partition& p, Signature&& signature, double tol) {
  Partition out;
  for (const auto& block : p.blocks) {
    std::vector<std::vector<double>> reps;
    std::vector<std::vector<std::size_t>> groups;
    for (auto s : block) {
      auto sig = signature(s);
      std::size_t g = 0;
      while (g < reps.size() && !close(reps[g], sig, tol)) ++g;
      if (g == reps.size()) {
        reps.push_back(std::move(sig));
        groups.emplace_back();
      }
      groups[g].push_back(s);
    }
    for (auto& g : groups) out.blocks.push_back(std::move(g));
  }
  std::sort(out.blocks.begin(), out.blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

}  // namespace

std::vector<std::size_t> Partition::block_of(std::size_t num_states) const {
  std::vector<std::size_t> out(num_states, blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (auto s : blocks[b]) out.at(s) = b;
  return out;
}

bool is_partition(const Partition& p, std::size_t num_states) {
  std::vector<int> seen(num_states, 0);
  for (const auto& block : p.blocks) {
    if (block.empty()) return false;
    for (auto s : block) {
      if (s >= num_states || seen[s]++) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

Partition initial_reward_partition(const FlatMdp& mdp, double tol) {
  Partition all;
  all.blocks.emplace_back();
  for (std::size_t s = 0; s < mdp.num_states(); ++s) all.blocks[0].push_back(s);
  if (mdp.num_states() == 0) return {};
  return split_blocks(all, [&](std::size_t s) {
    std::vector<double> sig{mdp.reward[s]};
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) sig.push_back(mdp.cost(a, s));
    return sig;
  }, tol);
}

std::vector<double> block_transition(const FlatMdp& mdp, std::size_t action,
                                     std::size_t state,
                                     const std::vector<std::size_t>& block_of,
                                     std::size_t num_blocks) {
  std::vector<double> mass(num_blocks, 0.0);
  for (Matrix::InnerIterator it(mdp.transitions(action), static_cast<Eigen::Index>(state)); it; ++it)
    mass[block_of[it.col()]] += it.value();
  return mass;
}

Partition refine_partition(const FlatMdp& mdp, const Partition& initial, double tol) {
  if (!is_partition(initial, mdp.num_states()))
    throw Error(ErrorKind::Argument, "initial grouping is not a partition of the states");
  Partition p = initial;
  p.labels.clear();
  for (;;) {
    const auto block_of = p.block_of(mdp.num_states());
    auto next = split_blocks(p, [&](std::size_t s) {
      std::vector<double> sig;
      sig.reserve(mdp.num_actions() * p.size());
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        const auto mass = block_transition(mdp, a, s, block_of, p.size());
        sig.insert(sig.end(), mass.begin(), mass.end());
      }
      return sig;
    }, tol);
    if (next.size() == p.size()) {
      std::sort(p.blocks.begin(), p.blocks.end(),
                [](const auto& a, const auto& b) { return a.front() < b.front(); });
      return p;
    }
    p = std::move(next);
  }
}

bool is_stable(const FlatMdp& mdp, const Partition& p, double tol) {
  if (!is_partition(p, mdp.num_states())) return false;
  const auto block_of = p.block_of(mdp.num_states());
  for (const auto& block : p.blocks) {
    const auto rep = block.front();
    for (auto s : block) {
      if (std::abs(mdp.reward[s] - mdp.reward[rep]) > tol) return false;
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        if (std::abs(mdp.cost(a, s) - mdp.cost(a, rep)) > tol) return false;
        if (!close(block_transition(mdp, a, s, block_of, p.size()),
                   block_transition(mdp, a, rep, block_of, p.size()), tol))
          return false;
      }
    }
  }
  return true;
}

FlatMdp quotient(const FlatMdp& mdp, const Partition& p, double tol) {
  if (!is_stable(mdp, p, tol))
    throw Error(ErrorKind::Stability, "partition is not stable; refine it before building a quotient");
  const auto k = p.size();
  const auto block_of = p.block_of(mdp.num_states());
  FlatMdp out;
  out.criterion = mdp.criterion;
  for (std::size_t b = 0; b < k; ++b) {
    out.states.push_back(b < p.labels.size() && !p.labels[b].empty() ? p.labels[b]
                                                                      : "B" + std::to_string(b));
    out.reward.push_back(mdp.reward[p.blocks[b].front()]);
  }
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    ActionRecord rec;
    rec.name = mdp.actions[a].name;
    rec.default_cost = mdp.actions[a].default_cost;
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t b = 0; b < k; ++b) {
      const auto rep = p.blocks[b].front();
      const double c = mdp.cost(a, rep);
      if (c != rec.default_cost) rec.cost_overrides[b] = c;
      const auto mass = block_transition(mdp, a, rep, block_of, k);
      for (std::size_t c2 = 0; c2 < k; ++c2)
        if (mass[c2] != 0.0)
          entries.emplace_back(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c2), mass[c2]);
    }
    rec.matrix = Matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    rec.matrix.setFromTriplets(entries.begin(), entries.end());
    rec.matrix.makeCompressed();
    out.actions.push_back(std::move(rec));
  }
  if (mdp.initial) {
    std::vector<double> init(k, 0.0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) init[block_of[s]] += (*mdp.initial)[s];
    out.initial = std::move(init);
  }
  return out;
}

LiftedSolution lift_solution(const StationarySolution& sol, const Partition& p,
                             std::size_t num_states) {
  if (sol.values.size() != p.size() || sol.policy.action.size() != p.size())
    throw Error(ErrorKind::Argument, "solution does not match the partition");
  const auto block_of = p.block_of(num_states);
  LiftedSolution out;
  out.values.resize(num_states);
  out.policy.action.resize(num_states);
  for (std::size_t s = 0; s < num_states; ++s) {
    out.values[s] = sol.values[block_of[s]];
    out.policy.action[s] = sol.policy.action[block_of[s]];
  }
  return out;
}

}  // namespace dtp
