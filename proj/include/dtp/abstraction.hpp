#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtp/factored.hpp"

namespace dtp {

using VariableSet = std::set<std::size_t>;

/// Variables tested by any reward component.
VariableSet reward_variables(const FactoredMdp& fmdp);

/// Least superset of `seed` closed under "tested by a CPT of a relevant
/// variable" (nets) and "tested on a context path whose effects change a
/// relevant variable" (PSOs).
VariableSet relevant_closure(const FactoredMdp& fmdp, const VariableSet& seed);

bool is_relevance_closed(const FactoredMdp& fmdp, const VariableSet& keep);

/// Drops every variable outside `keep` along with its CPTs and the reward
/// components that test it. Throws Closure when `keep` is not closed.
FactoredMdp project_abstract(const FactoredMdp& fmdp, const VariableSet& keep);

// ---------------------------------------------------------------------------
// Deterministic STRIPS regression

struct Literal {
  std::size_t var = 0;
  int value = 0;
  auto operator<=>(const Literal&) const = default;
};

/// At most one value per variable.
using SubgoalSet = std::set<Literal>;

struct StripsOp {
  std::string name;
  std::vector<Literal> precondition;
  std::vector<Literal> effects;
  double cost = 0.0;
};

bool is_consistent(const SubgoalSet& sg);
bool satisfies(const Assignment& s, const SubgoalSet& sg);

/// Empty when the op's effects contradict a subgoal or its precondition
/// contradicts a subgoal it leaves unachieved.
std::optional<SubgoalSet> strips_regress(const SubgoalSet& sg, const StripsOp& op);

/// True when the op makes at least one literal of `sg` true.
bool achieves_any(const SubgoalSet& sg, const StripsOp& op);

/// Precondition must hold; returns the successor.
std::optional<Assignment> apply_strips(const StripsOp& op, const Assignment& s);

struct RegressionPlan {
  std::vector<std::size_t> ops;        // forward execution order
  std::vector<SubgoalSet> subgoals;    // goal first, then one per regression step
};

/// Depth-first backward search, lowest op index first. Empty when nothing
/// is found within `depth_cap` regressions.
std::optional<RegressionPlan> regression_plan(const std::vector<StripsOp>& ops,
                                              const Assignment& init,
                                              const SubgoalSet& goal,
                                              std::size_t depth_cap);

/// Reads deterministic PSOs (one context leaf with a certain effect, every
/// other leaf a no-op) as STRIPS operators. Throws UnsupportedStructure
/// otherwise.
std::vector<StripsOp> strips_from_factored(const FactoredMdp& fmdp);

/// Parses "X=v,Y=w" into literals.
SubgoalSet parse_subgoals(std::string_view text, const std::vector<VariableSpec>& vars);
std::string subgoal_text(const SubgoalSet& sg, const std::vector<VariableSpec>& vars);

}  // namespace dtp
