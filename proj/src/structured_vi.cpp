#include "dtp/structured_vi.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dtp/error.hpp"
#include "dtp/solvers.hpp"

namespace dtp {
namespace {

constexpr std::size_t kMaxIterations = 1'000'000;

const Distribution* find_factor(const Joint& joint, std::size_t var) {
  for (const auto& [v, d] : joint)
    if (v == var) return &d;
  return nullptr;
}

// Can a node testing `x` be reached with positive probability given the
// factors fixed so far? Unfixed variables may take any value.
bool reaches_test(const ValueTree& t, const Joint& joint, std::size_t x) {
  if (t.is_leaf()) return false;
  const auto var = t.test().var;
  if (var == x) return true;
  const auto* d = find_factor(joint, var);
  for (std::size_t v = 0; v < t.children().size(); ++v) {
    if (d && (*d)[v] <= 0.0) continue;
    if (reaches_test(t.children()[v], joint, x)) return true;
  }
  return false;
}

void require_simple(const TwoSliceNet& net) {
  if (!is_simple_net(net))
    throw Error(ErrorKind::UnsupportedStructure,
                "action " + net.name + " has synchronic arcs; structured regression needs a simple net");
}

struct Collapse {
  std::vector<std::size_t> path;
  Interval merged;
};

void find_collapse(const IntervalTree& t, std::vector<std::size_t>& path,
                   std::optional<Collapse>& best) {
  if (t.is_leaf()) return;
  const bool all_leaves = std::all_of(t.children().begin(), t.children().end(),
                                      [](const IntervalTree& c) { return c.is_leaf(); });
  if (all_leaves) {
    Interval merged = t.children().front().payload();
    for (const auto& c : t.children()) {
      merged.lo = std::min(merged.lo, c.payload().lo);
      merged.hi = std::max(merged.hi, c.payload().hi);
    }
    if (!best || merged.span() < best->merged.span()) best = Collapse{path, merged};
    return;
  }
  for (std::size_t v = 0; v < t.children().size(); ++v) {
    path.push_back(v);
    find_collapse(t.children()[v], path, best);
    path.pop_back();
  }
}

IntervalTree replace_at(const IntervalTree& t, std::span<const std::size_t> path,
                        const Interval& merged) {
  if (path.empty()) return IntervalTree::leaf(merged);
  auto kids = t.children();
  kids[path.front()] = replace_at(kids[path.front()], path.subspan(1), merged);
  return IntervalTree::node(t.test(), std::move(kids));
}

double widest(const IntervalTree& t) {
  double w = 0.0;
  for_each_leaf(t, [&](const PathContext&, const Interval& i) { w = std::max(w, i.span()); });
  return w;
}

}  // namespace

JointTree pregress(const ValueTree& vtree, const TwoSliceNet& action) {
  require_simple(action);
  JointTree acc = JointTree::leaf({});
  for (const auto test : tested_variables(vtree)) {
    if (test.post || test.var >= action.cpts.size())
      throw Error(ErrorKind::MalformedTree, "value tree tests an unknown variable");
    const auto x = test.var;
    acc = graft_leaves<Joint>(acc, [&](const PathContext& ctx, const Joint& joint) {
      // Skip the graft where the value of x cannot matter.
      if (!reaches_test(vtree, joint, x)) return JointTree::leaf(joint);
      const auto cpt = simplify(restrict_tree(action.cpts[x], ctx));
      return map_leaves(cpt, [&](const Distribution& d) {
        Joint extended = joint;
        extended.emplace_back(x, d);
        return extended;
      });
    });
  }
  return simplify(acc);
}

double expected_value(const ValueTree& vtree, const Joint& joint) {
  if (vtree.is_leaf()) return vtree.payload();
  const auto* d = find_factor(joint, vtree.test().var);
  if (!d) throw Error(ErrorKind::MalformedTree, "joint lacks a factor for a reachable test");
  double sum = 0.0;
  for (std::size_t v = 0; v < vtree.children().size(); ++v)
    if ((*d)[v] > 0.0) sum += (*d)[v] * expected_value(vtree.children()[v], joint);
  return sum;
}

ValueTree reward_tree(std::span<const ScalarTree> components) {
  ValueTree sum = ValueTree::leaf(0.0);
  for (const auto& c : components)
    sum = apply_trees(sum, c, [](double a, double b) { return a + b; });
  return simplify(sum);
}

ValueTree q_tree(const TwoSliceNet& action, const ValueTree& vtree, double gamma,
                 std::span<const ScalarTree> reward) {
  const auto future = map_leaves(pregress(vtree, action),
                                 [&](const Joint& j) { return expected_value(vtree, j); });
  const ValueTree cost = action.cost_tree ? *action.cost_tree : ValueTree::leaf(action.cost);
  const auto tail = apply_trees(cost, future, [&](double c, double e) { return c + gamma * e; });
  return simplify(apply_trees(reward_tree(reward), tail, [](double r, double t) { return r + t; }));
}

MergedTrees max_merge_trees(std::span<const ValueTree> qtrees) {
  if (qtrees.empty()) throw Error(ErrorKind::Argument, "max_merge_trees needs at least one tree");
  using Best = std::pair<double, std::size_t>;
  auto acc = map_leaves(qtrees[0], [](double v) { return Best{v, 0}; });
  for (std::size_t a = 1; a < qtrees.size(); ++a)
    acc = apply_trees(acc, qtrees[a], [a](const Best& b, double v) {
      return v > b.first ? Best{v, a} : b;
    });
  return {simplify(map_leaves(acc, [](const Best& b) { return b.first; })),
          simplify(map_leaves(acc, [](const Best& b) { return b.second; }))};
}

double tree_distance(const ValueTree& a, const ValueTree& b) {
  const auto diff = apply_trees(a, b, [](double x, double y) { return std::abs(x - y); });
  double d = 0.0;
  for_each_leaf(diff, [&](const PathContext&, double v) { d = std::max(d, v); });
  return d;
}

SviResult structured_value_iteration(const FactoredMdp& fmdp, const SviStop& stop) {
  std::vector<const TwoSliceNet*> nets;
  for (const auto& a : fmdp.actions) {
    const auto* net = std::get_if<TwoSliceNet>(&a);
    if (!net)
      throw Error(ErrorKind::UnsupportedStructure,
                  "action " + action_name(a) + " is a PSO; structured regression needs simple nets");
    require_simple(*net);
    nets.push_back(net);
  }
  if (nets.empty()) throw Error(ErrorKind::Argument, "model has no actions");

  SviResult out;
  out.value = reward_tree(fmdp.reward);
  out.policy = PolicyTree::leaf(0);

  auto backup = [&](double gamma) {
    std::vector<ValueTree> qs;
    qs.reserve(nets.size());
    for (const auto* net : nets) qs.push_back(q_tree(*net, out.value, gamma, fmdp.reward));
    auto merged = max_merge_trees(qs);
    ++out.iterations;
    out.leaf_counts.push_back(leaf_count(merged.value));
    return merged;
  };

  if (const auto* finite = std::get_if<FiniteHorizon>(&stop)) {
    if (finite->steps < 1) throw Error(ErrorKind::Argument, "horizon must be positive");
    for (int t = 0; t < finite->steps; ++t) {
      auto merged = backup(1.0);
      out.value = std::move(merged.value);
      out.policy = std::move(merged.policy);
    }
    return out;
  }

  const auto& disc = std::get<DiscountedStop>(stop);
  if (!(disc.gamma >= 0.0 && disc.gamma < 1.0))
    throw Error(ErrorKind::Criterion, "discount must lie in [0, 1)");
  if (!(disc.eps > 0.0)) throw Error(ErrorKind::Argument, "eps must be positive");
  const double threshold = vi_threshold(disc.gamma, disc.eps);
  while (out.iterations < kMaxIterations) {
    auto merged = backup(disc.gamma);
    out.residual = tree_distance(merged.value, out.value);
    out.value = std::move(merged.value);
    out.policy = std::move(merged.policy);
    if (out.residual <= threshold) return out;
  }
  throw Error(ErrorKind::Numeric, "structured value iteration did not converge");
}

IntervalTree to_interval_tree(const ValueTree& t) {
  return map_leaves(t, [](double v) { return Interval{v, v}; });
}

PrunedTree prune_value_tree(const IntervalTree& input, const PruneBudget& budget) {
  IntervalTree t = simplify(input);
  if (const auto* leaves = std::get_if<MaxLeaves>(&budget)) {
    if (leaves->n < 1) throw Error(ErrorKind::Argument, "leaf budget must be at least 1");
    while (leaf_count(t) > leaves->n) {
      std::optional<Collapse> best;
      std::vector<std::size_t> path;
      find_collapse(t, path, best);
      t = simplify(replace_at(t, best->path, best->merged));
    }
  } else {
    const double delta = std::get<MaxSpan>(budget).delta;
    if (!(delta >= 0.0)) throw Error(ErrorKind::Argument, "span budget must be nonnegative");
    for (;;) {
      std::optional<Collapse> best;
      std::vector<std::size_t> path;
      find_collapse(t, path, best);
      if (!best || best->merged.span() > delta) break;
      t = simplify(replace_at(t, best->path, best->merged));
    }
  }
  return {t, widest(t)};
}

PrunedTree prune_value_tree(const ValueTree& t, const PruneBudget& budget) {
  return prune_value_tree(to_interval_tree(t), budget);
}

ValueTree midpoint_tree(const IntervalTree& t) {
  return simplify(map_leaves(t, [](const Interval& i) { return 0.5 * (i.lo + i.hi); }));
}

}  // namespace dtp
