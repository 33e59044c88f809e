#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "dtp/chain.hpp"
#include "dtp/mdp.hpp"

namespace dtp {

/// values[t] is the optimal t-stage-to-go value function (values[0] = R);
/// policy.action[t] attains the maximum of the backup of values[t-1].
struct FiniteSolution {
  std::vector<ValueFunction> values;
  NonstationaryPolicy policy;
};

struct StationarySolution {
  StationaryPolicy policy;
  ValueFunction values;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Optional per-iteration record for the iterative solvers.
struct SolveTrace {
  std::vector<double> residuals;              // sup-norm change per sweep
  std::vector<ValueFunction> policy_values;   // policy iteration: V^{pi_i}
};

/// q[a][s].
struct QFunction {
  std::vector<std::vector<double>> values;
  double operator()(std::size_t a, std::size_t s) const { return values[a][s]; }
};

struct IterationCount {
  std::size_t backups = 0;
};
struct Tolerance {
  double eps = 1e-8;
};
using EvaluationStop = std::variant<IterationCount, Tolerance>;

/// Sup-norm stopping threshold eps(1 - gamma) / (2 gamma); infinite at gamma = 0.
double vi_threshold(double gamma, double eps);

/// Argmax over q[.][s] with the lowest index winning ties.
std::size_t greedy_action(const QFunction& q, std::size_t s);
StationaryPolicy greedy_policy(const QFunction& q);
/// Every action whose Q is within tol of the best.
std::vector<std::size_t> argmax_set(const QFunction& q, std::size_t s, double tol);

FiniteSolution vi_finite(const FlatMdp& mdp, int horizon);

StationarySolution vi_discounted(const FlatMdp& mdp, double gamma, double eps,
                                 SolveTrace* trace = nullptr);

ValueFunction evaluate_policy_exact(const FlatMdp& mdp, const StationaryPolicy& policy,
                                    double gamma);

ValueFunction evaluate_policy_iterative(const FlatMdp& mdp,
                                        const StationaryPolicy& policy, double gamma,
                                        const EvaluationStop& stop);

/// Q(a,s) = R(s) + C(a,s) + gamma * sum_s' Pr(s'|a,s) V(s').
QFunction q_from_value(const FlatMdp& mdp, const ValueFunction& v, double gamma);

StationarySolution policy_iteration(const FlatMdp& mdp, double gamma,
                                    const StationaryPolicy& initial,
                                    SolveTrace* trace = nullptr);

StationarySolution modified_policy_iteration(const FlatMdp& mdp, double gamma,
                                             std::size_t m, double eps = 1e-8,
                                             SolveTrace* trace = nullptr);

struct ReachabilityResult {
  ValueFunction reach_prob;
  std::size_t k_used = 0;
};

/// Maximal probability of entering `goal` within |S| stages.
ReachabilityResult goal_reachability(const FlatMdp& mdp, const StateSet& goal);

}  // namespace dtp
