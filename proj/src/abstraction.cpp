#include "dtp/abstraction.hpp"

#include <algorithm>
#include <cmath>

#include "dtp/error.hpp"

namespace dtp {
namespace {

// Rewrites variable indices through `index` (-1 marks a dropped variable).
template <class L, class F>
DecisionTree<L> remap_tree(const DecisionTree<L>& t, const std::vector<long>& index,
                           const std::vector<VariableSpec>& vars, F&& leaf) {
  if (t.is_leaf()) return DecisionTree<L>::leaf(leaf(t.payload()));
  const auto test = t.test();
  if (index[test.var] < 0)
    throw Error(ErrorKind::Closure, "tree still tests dropped variable " + vars[test.var].name);
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.children().size());
  for (const auto& c : t.children()) kids.push_back(remap_tree(c, index, vars, leaf));
  return DecisionTree<L>::node({static_cast<std::size_t>(index[test.var]), test.post},
                               std::move(kids));
}

template <class L>
bool tests_only(const DecisionTree<L>& t, const VariableSet& keep) {
  for (const auto& v : tested_variables(t))
    if (!keep.count(v.var)) return false;
  return true;
}

bool conflicts(const SubgoalSet& sg, const Literal& lit) {
  for (const auto& l : sg)
    if (l.var == lit.var && l.value != lit.value) return true;
  return false;
}

}  // namespace

VariableSet reward_variables(const FactoredMdp& fmdp) {
  VariableSet out;
  for (const auto& c : fmdp.reward)
    for (const auto& t : tested_variables(c)) out.insert(t.var);
  return out;
}

VariableSet relevant_closure(const FactoredMdp& fmdp, const VariableSet& seed) {
  VariableSet rel = seed;
  for (bool changed = true; changed;) {
    const auto before = rel.size();
    for (const auto& action : fmdp.actions) {
      if (const auto* net = std::get_if<TwoSliceNet>(&action)) {
        const VariableSet current = rel;
        for (auto x : current)
          if (x < net->cpts.size())
            for (const auto& t : tested_variables(net->cpts[x])) rel.insert(t.var);
      } else {
        const auto& pso = std::get<ProbStripsOp>(action);
        for_each_leaf(pso.context, [&](const PathContext& ctx, const EffectList& effects) {
          bool touches = false;
          for (const auto& o : effects)
            for (const auto& [var, val] : o.changes) touches = touches || rel.count(var);
          if (touches)
            for (const auto& [test, value] : ctx.entries()) rel.insert(test.var);
        });
      }
    }
    changed = rel.size() != before;
  }
  return rel;
}

bool is_relevance_closed(const FactoredMdp& fmdp, const VariableSet& keep) {
  return relevant_closure(fmdp, keep) == keep;
}

FactoredMdp project_abstract(const FactoredMdp& fmdp, const VariableSet& keep) {
  const auto& vars = fmdp.variables;
  for (auto v : keep)
    if (v >= vars.size()) throw Error(ErrorKind::Argument, "keep set names an undeclared variable");
  const auto closure = relevant_closure(fmdp, keep);
  for (auto v : closure)
    if (!keep.count(v))
      throw Error(ErrorKind::Closure,
                  "keep set is not relevance-closed: it also needs " + vars[v].name);

  std::vector<long> index(vars.size(), -1);
  FactoredMdp out;
  out.criterion = fmdp.criterion;
  out.grounding_cap = fmdp.grounding_cap;
  for (auto v : keep) {
    index[v] = static_cast<long>(out.variables.size());
    out.variables.push_back(vars[v]);
  }
  const auto same = [](const auto& x) { return x; };

  for (const auto& c : fmdp.reward)
    if (tests_only(c, keep)) out.reward.push_back(remap_tree(c, index, vars, same));

  auto project_cost = [&](const std::optional<ScalarTree>& cost) -> std::optional<ScalarTree> {
    if (!cost) return std::nullopt;
    return remap_tree(simplify(*cost), index, vars, same);
  };

  for (const auto& action : fmdp.actions) {
    if (const auto* net = std::get_if<TwoSliceNet>(&action)) {
      TwoSliceNet p{net->name, net->cost, project_cost(net->cost_tree), {}};
      for (auto v : keep) p.cpts.push_back(remap_tree(net->cpts.at(v), index, vars, same));
      out.actions.emplace_back(std::move(p));
      continue;
    }
    const auto& pso = std::get<ProbStripsOp>(action);
    auto filter = [&](const EffectList& effects) {
      EffectList merged;
      for (const auto& o : effects) {
        Outcome kept{{}, o.prob};
        for (const auto& [var, val] : o.changes)
          if (index[var] >= 0) kept.changes.emplace_back(static_cast<std::size_t>(index[var]), val);
        std::sort(kept.changes.begin(), kept.changes.end());
        auto it = std::find_if(merged.begin(), merged.end(),
                               [&](const Outcome& m) { return m.changes == kept.changes; });
        if (it == merged.end())
          merged.push_back(std::move(kept));
        else
          it->prob += kept.prob;
      }
      return merged;
    };
    // Filter first so that tests guarding only dropped effects simplify away.
    const auto filtered = simplify(map_leaves(pso.context, filter));
    ProbStripsOp p{pso.name, pso.cost, project_cost(pso.cost_tree),
                   remap_tree(filtered, index, vars, same)};
    out.actions.emplace_back(std::move(p));
  }
  return out;
}

bool is_consistent(const SubgoalSet& sg) {
  const Literal* prev = nullptr;
  for (const auto& l : sg) {
    if (prev && prev->var == l.var) return false;
    prev = &l;
  }
  return true;
}

bool satisfies(const Assignment& s, const SubgoalSet& sg) {
  return std::all_of(sg.begin(), sg.end(),
                     [&](const Literal& l) { return s.at(l.var) == l.value; });
}

bool achieves_any(const SubgoalSet& sg, const StripsOp& op) {
  return std::any_of(op.effects.begin(), op.effects.end(),
                     [&](const Literal& e) { return sg.count(e) > 0; });
}

std::optional<SubgoalSet> strips_regress(const SubgoalSet& sg, const StripsOp& op) {
  for (const auto& e : op.effects)
    if (conflicts(sg, e)) return std::nullopt;
  SubgoalSet remaining;
  for (const auto& l : sg)
    if (std::find(op.effects.begin(), op.effects.end(), l) == op.effects.end())
      remaining.insert(l);
  for (const auto& p : op.precondition) {
    if (conflicts(remaining, p)) return std::nullopt;
    remaining.insert(p);
  }
  if (!is_consistent(remaining)) return std::nullopt;
  return remaining;
}

std::optional<Assignment> apply_strips(const StripsOp& op, const Assignment& s) {
  for (const auto& p : op.precondition)
    if (s.at(p.var) != p.value) return std::nullopt;
  Assignment next = s;
  for (const auto& e : op.effects) next.at(e.var) = e.value;
  return next;
}

std::optional<RegressionPlan> regression_plan(const std::vector<StripsOp>& ops,
                                              const Assignment& init,
                                              const SubgoalSet& goal,
                                              std::size_t depth_cap) {
  RegressionPlan plan;
  plan.subgoals.push_back(goal);
  std::vector<std::size_t> backward;
  auto dfs = [&](auto& self, std::size_t depth) -> bool {
    const auto& sg = plan.subgoals.back();
    if (satisfies(init, sg)) return true;
    if (depth == depth_cap) return false;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (!achieves_any(sg, ops[i])) continue;
      auto next = strips_regress(sg, ops[i]);
      if (!next) continue;
      // A subgoal set already on the path cannot lead anywhere new.
      if (std::find(plan.subgoals.begin(), plan.subgoals.end(), *next) != plan.subgoals.end())
        continue;
      plan.subgoals.push_back(std::move(*next));
      backward.push_back(i);
      if (self(self, depth + 1)) return true;
      plan.subgoals.pop_back();
      backward.pop_back();
    }
    return false;
  };
  if (!dfs(dfs, 0)) return std::nullopt;
  plan.ops.assign(backward.rbegin(), backward.rend());
  return plan;
}

std::vector<StripsOp> strips_from_factored(const FactoredMdp& fmdp) {
  std::vector<StripsOp> out;
  for (const auto& action : fmdp.actions) {
    const auto* pso = std::get_if<ProbStripsOp>(&action);
    if (!pso)
      throw Error(ErrorKind::UnsupportedStructure,
                  "action " + action_name(action) + " is not a STRIPS-style operator");
    StripsOp op{pso->name, {}, {}, pso->cost};
    std::size_t active = 0;
    for_each_leaf(pso->context, [&](const PathContext& ctx, const EffectList& effects) {
      bool noop = true;
      for (const auto& o : effects) noop = noop && (o.changes.empty() || o.prob == 0.0);
      if (noop) return;
      if (effects.size() != 1 || std::abs(effects[0].prob - 1.0) > kStochasticTol)
        throw Error(ErrorKind::UnsupportedStructure,
                    "action " + pso->name + " has a stochastic effect");
      ++active;
      for (const auto& [test, value] : ctx.entries()) op.precondition.push_back({test.var, value});
      for (const auto& [var, val] : effects[0].changes) op.effects.push_back({var, val});
    });
    if (active > 1)
      throw Error(ErrorKind::UnsupportedStructure,
                  "action " + pso->name + " has more than one effectful context");
    std::sort(op.precondition.begin(), op.precondition.end());
    std::sort(op.effects.begin(), op.effects.end());
    out.push_back(std::move(op));
  }
  return out;
}

SubgoalSet parse_subgoals(std::string_view text, const std::vector<VariableSpec>& vars) {
  const auto a = parse_assignment(text, vars);
  SubgoalSet sg;
  for (std::size_t v = 0; v < a.size(); ++v)
    if (a[v] >= 0) sg.insert({v, a[v]});
  return sg;
}

std::string subgoal_text(const SubgoalSet& sg, const std::vector<VariableSpec>& vars) {
  std::string out;
  for (const auto& l : sg) {
    if (!out.empty()) out += ',';
    out += vars.at(l.var).name + "=" + vars.at(l.var).domain.at(static_cast<std::size_t>(l.value));
  }
  return out;
}

}  // namespace dtp
