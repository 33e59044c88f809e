#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dtp/mdp.hpp"
#include "dtp/tree.hpp"

namespace dtp {

struct VariableSpec {
  std::string name;
  std::vector<std::string> domain;

  std::size_t size() const { return domain.size(); }
  std::optional<int> find_value(std::string_view value) const;
};

/// Full assignment: one domain-value index per declared variable.
using Assignment = std::vector<int>;

/// Distribution over one variable's domain.
using Distribution = std::vector<double>;

/// One change set of a stochastic effect: listed variables are overwritten,
/// all others persist.
struct Outcome {
  std::vector<std::pair<std::size_t, int>> changes;
  double prob = 0.0;
  bool operator==(const Outcome&) const = default;
};

using EffectList = std::vector<Outcome>;

using ScalarTree = DecisionTree<double>;
using DistTree = DecisionTree<Distribution>;
using EffectTree = DecisionTree<EffectList>;

/// Per-action two-slice network: one CPT per post-state variable. CPT nodes
/// test pre-state variables, or post-state variables earlier in the
/// synchronic order.
struct TwoSliceNet {
  std::string name;
  double cost = 0.0;
  std::optional<ScalarTree> cost_tree;  // overrides `cost` when present
  std::vector<DistTree> cpts;           // indexed by variable
};

/// Probabilistic STRIPS operator: the context tree's leaves are stochastic
/// effects.
struct ProbStripsOp {
  std::string name;
  double cost = 0.0;
  std::optional<ScalarTree> cost_tree;
  EffectTree context;
};

using FactoredAction = std::variant<TwoSliceNet, ProbStripsOp>;

inline constexpr std::size_t kDefaultGroundingCap = std::size_t{1} << 20;

struct FactoredMdp {
  std::vector<VariableSpec> variables;
  std::vector<FactoredAction> actions;
  std::vector<ScalarTree> reward;  // additive components
  Criterion criterion = Discounted{0.9};
  std::size_t grounding_cap = kDefaultGroundingCap;

  std::optional<std::size_t> find_variable(std::string_view name) const;
  std::optional<std::size_t> find_action(std::string_view name) const;
  /// Product of domain sizes, saturating at SIZE_MAX.
  std::size_t state_count() const;
};

const std::string& action_name(const FactoredAction& a);
double action_cost(const FactoredAction& a, const Assignment& s);

/// Structural checks: branch counts match domains, no variable repeated on a
/// path, leaf sums, every variable has a CPT, synchronic arcs acyclic.
ValidationReport validate_factored(const FactoredMdp& fmdp);

/// Checks one tree against the declared variables. Post-state tests are
/// permitted only when `allow_post`.
template <class L>
void check_tree_shape(const DecisionTree<L>& t, const std::vector<VariableSpec>& vars,
                      bool allow_post, const std::string& where,
                      ValidationReport& report, const PathContext& ctx = {}) {
  if (t.is_leaf()) return;
  const auto test = t.test();
  if (test.var >= vars.size()) {
    report.issues.push_back({where, "test of undeclared variable index " + std::to_string(test.var)});
    return;
  }
  const auto& name = vars[test.var].name;
  if (test.post && !allow_post)
    report.issues.push_back({where, "post-state test of " + name + " not allowed here"});
  if (ctx.lookup(test))
    report.issues.push_back({where, "variable " + name + " tested twice on one path"});
  if (t.children().size() != vars[test.var].size()) {
    report.issues.push_back({where, "node testing " + name + " has " +
                                        std::to_string(t.children().size()) + " branches for " +
                                        std::to_string(vars[test.var].size()) + " values"});
    return;
  }
  for (std::size_t v = 0; v < t.children().size(); ++v)
    check_tree_shape(t.children()[v], vars, allow_post, where, report,
                     ctx.with(test, static_cast<int>(v)));
}

bool is_simple_net(const TwoSliceNet& net);

/// Topological order of post-state variables under synchronic arcs, lowest
/// index first among ready variables. Throws Argument on a cycle.
std::vector<std::size_t> synchronic_order(const TwoSliceNet& net);

const ScalarTree::Leaf& eval_tree(const ScalarTree& t, const Assignment& s);
double reward_at(const FactoredMdp& fmdp, const Assignment& s);

/// Successor distribution of a PSO; coinciding successors are merged, in
/// order of first appearance.
std::vector<std::pair<Assignment, double>> apply_pso(const ProbStripsOp& op,
                                                     const Assignment& s);

/// Successor distribution of a net (chain rule in synchronic order).
std::vector<std::pair<Assignment, double>> apply_net(const TwoSliceNet& net,
                                                     const Assignment& s);

/// Lexicographic state indexing: the first declared variable is most
/// significant, values in domain order.
std::size_t encode_state(const Assignment& s, const std::vector<VariableSpec>& vars);
Assignment decode_state(std::size_t index, const std::vector<VariableSpec>& vars);
std::string state_name(const Assignment& s, const std::vector<VariableSpec>& vars);

/// Parses "X=v,Y=w" partial assignments; unmentioned variables are -1.
Assignment parse_assignment(std::string_view text, const std::vector<VariableSpec>& vars);

FlatMdp ground(const FactoredMdp& fmdp);

}  // namespace dtp
