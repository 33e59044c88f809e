#include "dtp/search.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "dtp/error.hpp"

namespace dtp {

StateSet reachable_set(const FlatMdp& mdp, const StateSet& init) {
  StateSet seen;
  std::deque<std::size_t> frontier;
  for (auto s : init) {
    if (s >= mdp.num_states()) throw Error(ErrorKind::Argument, "initial state out of range");
    if (seen.insert(s).second) frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const auto s = frontier.front();
    frontier.pop_front();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      for (Matrix::InnerIterator it(mdp.transitions(a), static_cast<Eigen::Index>(s)); it; ++it)
        if (it.value() > 0.0 && seen.insert(static_cast<std::size_t>(it.col())).second)
          frontier.push_back(static_cast<std::size_t>(it.col()));
  }
  return seen;
}

FlatMdp restrict_mdp(const FlatMdp& mdp, const StateSet& keep) {
  std::vector<long> index(mdp.num_states(), -1);
  long next = 0;
  for (auto s : keep) {
    if (s >= mdp.num_states()) throw Error(ErrorKind::Argument, "keep set names an unknown state");
    index[s] = next++;
  }
  for (auto s : keep)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      for (Matrix::InnerIterator it(mdp.transitions(a), static_cast<Eigen::Index>(s)); it; ++it)
        if (it.value() > 0.0 && index[it.col()] < 0)
          throw Error(ErrorKind::Leakage, "state " + mdp.states[s] + " leaves the set under action " +
                                              mdp.actions[a].name + " (to " +
                                              mdp.states[it.col()] + ")");

  FlatMdp out;
  out.criterion = mdp.criterion;
  for (auto s : keep) {
    out.states.push_back(mdp.states[s]);
    out.reward.push_back(mdp.reward[s]);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    ActionRecord rec;
    rec.name = mdp.actions[a].name;
    rec.default_cost = mdp.actions[a].default_cost;
    for (const auto& [s, c] : mdp.actions[a].cost_overrides)
      if (index[s] >= 0) rec.cost_overrides[static_cast<std::size_t>(index[s])] = c;
    std::vector<Eigen::Triplet<double>> entries;
    for (auto s : keep)
      for (Matrix::InnerIterator it(mdp.transitions(a), static_cast<Eigen::Index>(s)); it; ++it)
        if (it.value() != 0.0) entries.emplace_back(index[s], index[it.col()], it.value());
    rec.matrix = Matrix(n, n);
    rec.matrix.setFromTriplets(entries.begin(), entries.end());
    rec.matrix.makeCompressed();
    out.actions.push_back(std::move(rec));
  }
  if (mdp.initial) {
    std::vector<double> init;
    double mass = 0.0;
    for (auto s : keep) {
      init.push_back((*mdp.initial)[s]);
      mass += init.back();
    }
    if (mass > 0.0) {
      for (auto& p : init) p /= mass;
      out.initial = std::move(init);
    }
  }
  return out;
}

namespace {

struct Expander {
  const FlatMdp& mdp;
  const Heuristic& heuristic;
  bool keep_tree;
  std::size_t nodes = 0;

  // Returns the node value; fills `node` when keeping the tree.
  double expand(std::size_t s, std::size_t remaining, std::size_t tree_depth,
                StateNode* node, std::optional<std::size_t>* best_action) {
    ++nodes;
    if (node) {
      node->state = s;
      node->depth = tree_depth;
    }
    if (remaining == 0) {
      const double v = heuristic ? heuristic(s) : mdp.reward[s];
      if (node) node->value = v;
      return v;
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t choice = 0;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      ActionNode* an = nullptr;
      if (node) {
        node->children.push_back({a, 0.0, {}});
        an = &node->children.back();
      }
      double sum = 0.0;
      for (Matrix::InnerIterator it(mdp.transitions(a), static_cast<Eigen::Index>(s)); it; ++it) {
        StateNode* child = nullptr;
        if (an) {
          an->outcomes.emplace_back(it.value(), StateNode{});
          child = &an->outcomes.back().second;
        }
        sum += it.value() *
               expand(static_cast<std::size_t>(it.col()), remaining - 1, tree_depth + 2, child, nullptr);
      }
      const double q = mdp.cost(a, s) + sum;
      if (an) an->value = q;
      if (q > best) {
        best = q;
        choice = a;
      }
    }
    const double v = mdp.reward[s] + best;
    if (node) node->value = v;
    if (best_action && mdp.num_actions() > 0) *best_action = choice;
    return v;
  }
};

}  // namespace

SearchResult expectimax(const FlatMdp& mdp, std::size_t s, std::size_t depth,
                        const Heuristic& heuristic, bool keep_tree) {
  if (s >= mdp.num_states()) throw Error(ErrorKind::Argument, "search start out of range");
  Expander ex{mdp, heuristic, keep_tree};
  SearchResult out;
  StateNode root;
  out.value = ex.expand(s, depth, 0, keep_tree ? &root : nullptr, &out.action);
  out.nodes = ex.nodes;
  if (keep_tree) out.tree = std::move(root);
  return out;
}

Trajectory plan_execute_loop(const FlatMdp& mdp, std::size_t s0, std::size_t search_depth,
                             std::size_t steps, std::uint64_t seed, const Heuristic& heuristic,
                             const ExecuteOptions& options) {
  if (search_depth < 1) throw Error(ErrorKind::Argument, "search depth must be positive");
  if (s0 >= mdp.num_states()) throw Error(ErrorKind::Argument, "start state out of range");
  SplitMix64 rng(seed);
  Trajectory traj;
  std::size_t s = s0;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto depth = options.shrink_to_remaining ? std::min(search_depth, steps - k) : search_depth;
    const auto result = expectimax(mdp, s, depth, heuristic);
    const auto a = *result.action;
    traj.steps.push_back({s, a});
    s = sample_successor(mdp.transitions(a), s, rng);
  }
  traj.final_state = s;
  return traj;
}

}  // namespace dtp
