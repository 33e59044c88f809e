#include "dtp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "dtp/error.hpp"

namespace dtp {
namespace {

constexpr double kImprovementThreshold = 1e-10;
constexpr std::size_t kMaxSweeps = 10'000'000;

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw Error(ErrorKind::Criterion, "discount must lie in [0, 1), got " + std::to_string(gamma));
}

double expected_next(const Matrix& m, std::size_t s, const ValueFunction& v) {
  double sum = 0.0;
  for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(s)); it; ++it)
    sum += it.value() * v[it.col()];
  return sum;
}

double sup_diff(const ValueFunction& a, const ValueFunction& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// One application of the policy's backup: R + C_pi + gamma P_pi V.
ValueFunction policy_backup(const FlatMdp& mdp, const StationaryPolicy& policy,
                            double gamma, const ValueFunction& v) {
  ValueFunction out(mdp.num_states());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto a = policy.action[s];
    out[s] = mdp.reward[s] +
             (mdp.cost(a, s) + gamma * expected_next(mdp.transitions(a), s, v));
  }
  return out;
}

ValueFunction max_over_actions(const QFunction& q, std::size_t n) {
  ValueFunction out(n);
  for (std::size_t s = 0; s < n; ++s) out[s] = q(greedy_action(q, s), s);
  return out;
}

}  // namespace

double vi_threshold(double gamma, double eps) {
  if (gamma == 0.0) return std::numeric_limits<double>::infinity();
  return eps * (1.0 - gamma) / (2.0 * gamma);
}

std::size_t greedy_action(const QFunction& q, std::size_t s) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.values.size(); ++a)
    if (q.values[a][s] > q.values[best][s]) best = a;
  return best;
}

StationaryPolicy greedy_policy(const QFunction& q) {
  StationaryPolicy p;
  const auto n = q.values.empty() ? 0 : q.values[0].size();
  p.action.resize(n);
  for (std::size_t s = 0; s < n; ++s) p.action[s] = greedy_action(q, s);
  return p;
}

std::vector<std::size_t> argmax_set(const QFunction& q, std::size_t s, double tol) {
  const double best = q(greedy_action(q, s), s);
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < q.values.size(); ++a)
    if (q.values[a][s] >= best - tol) out.push_back(a);
  return out;
}

FiniteSolution vi_finite(const FlatMdp& mdp, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::Argument, "horizon must be positive");
  const auto n = mdp.num_states();
  FiniteSolution sol;
  sol.values.reserve(static_cast<std::size_t>(horizon) + 1);
  sol.values.push_back(mdp.reward);
  sol.policy.action.assign(1, std::vector<std::size_t>(n, 0));
  for (int t = 1; t <= horizon; ++t) {
    const auto& prev = sol.values.back();
    ValueFunction cur(n);
    std::vector<std::size_t> choice(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        const double q = mdp.cost(a, s) + expected_next(mdp.transitions(a), s, prev);
        if (q > best) {
          best = q;
          choice[s] = a;
        }
      }
      cur[s] = mdp.reward[s] + best;
    }
    sol.values.push_back(std::move(cur));
    sol.policy.action.push_back(std::move(choice));
  }
  return sol;
}

QFunction q_from_value(const FlatMdp& mdp, const ValueFunction& v, double gamma) {
  QFunction q;
  q.values.assign(mdp.num_actions(), std::vector<double>(mdp.num_states()));
  for (std::size_t a = 0; a < mdp.num_actions(); ++a)
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
      q.values[a][s] = mdp.reward[s] +
                       (mdp.cost(a, s) + gamma * expected_next(mdp.transitions(a), s, v));
  return q;
}

StationarySolution vi_discounted(const FlatMdp& mdp, double gamma, double eps,
                                 SolveTrace* trace) {
  check_gamma(gamma);
  if (!(eps > 0.0)) throw Error(ErrorKind::Argument, "eps must be positive");
  const double threshold = vi_threshold(gamma, eps);
  ValueFunction v = mdp.reward;
  for (std::size_t it = 1; it <= kMaxSweeps; ++it) {
    const auto q = q_from_value(mdp, v, gamma);
    auto next = max_over_actions(q, mdp.num_states());
    const double residual = sup_diff(next, v);
    if (trace) trace->residuals.push_back(residual);
    if (residual <= threshold)
      return {greedy_policy(q), std::move(next), residual, it};
    v = std::move(next);
  }
  throw Error(ErrorKind::Numeric, "value iteration did not converge");
}

ValueFunction evaluate_policy_exact(const FlatMdp& mdp, const StationaryPolicy& policy,
                                    double gamma) {
  check_gamma(gamma);
  const auto n = mdp.num_states();
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const auto a = policy.action.at(s);
    const auto i = static_cast<Eigen::Index>(s);
    entries.emplace_back(i, i, 1.0);
    for (Matrix::InnerIterator it(mdp.transitions(a), i); it; ++it)
      entries.emplace_back(i, it.col(), -gamma * it.value());
    rhs[i] = mdp.reward[s] + mdp.cost(a, s);
  }
  Eigen::SparseMatrix<double> system(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  system.setFromTriplets(entries.begin(), entries.end());
  system.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorKind::Numeric, "policy evaluation system is singular");
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorKind::Numeric, "policy evaluation solve failed");

  ValueFunction v(x.data(), x.data() + x.size());
  const auto check = policy_backup(mdp, policy, gamma, v);
  if (sup_diff(check, v) > 1e-8)
    throw Error(ErrorKind::Numeric, "policy evaluation residual above 1e-8");
  return v;
}

ValueFunction evaluate_policy_iterative(const FlatMdp& mdp,
                                        const StationaryPolicy& policy, double gamma,
                                        const EvaluationStop& stop) {
  check_gamma(gamma);
  ValueFunction v = mdp.reward;
  if (const auto* count = std::get_if<IterationCount>(&stop)) {
    for (std::size_t k = 0; k < count->backups; ++k) v = policy_backup(mdp, policy, gamma, v);
    return v;
  }
  const double eps = std::get<Tolerance>(stop).eps;
  if (!(eps > 0.0)) throw Error(ErrorKind::Argument, "tolerance must be positive");
  for (std::size_t k = 0; k < kMaxSweeps; ++k) {
    auto next = policy_backup(mdp, policy, gamma, v);
    const double change = sup_diff(next, v);
    v = std::move(next);
    if (change <= eps) return v;
  }
  throw Error(ErrorKind::Numeric, "successive approximation did not converge");
}

StationarySolution policy_iteration(const FlatMdp& mdp, double gamma,
                                    const StationaryPolicy& initial, SolveTrace* trace) {
  check_gamma(gamma);
  if (initial.action.size() != mdp.num_states())
    throw Error(ErrorKind::Argument, "initial policy is not total");
  StationaryPolicy policy = initial;
  for (std::size_t it = 1;; ++it) {
    auto v = evaluate_policy_exact(mdp, policy, gamma);
    if (trace) trace->policy_values.push_back(v);
    const auto q = q_from_value(mdp, v, gamma);
    bool changed = false;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      const auto best = greedy_action(q, s);
      if (q(best, s) > v[s] + kImprovementThreshold && best != policy.action[s]) {
        policy.action[s] = best;
        changed = true;
      }
    }
    if (!changed) return {std::move(policy), std::move(v), 0.0, it};
  }
}

StationarySolution modified_policy_iteration(const FlatMdp& mdp, double gamma,
                                             std::size_t m, double eps,
                                             SolveTrace* trace) {
  check_gamma(gamma);
  if (m < 1) throw Error(ErrorKind::Argument, "m must be positive");
  if (!(eps > 0.0)) throw Error(ErrorKind::Argument, "eps must be positive");
  const double threshold = vi_threshold(gamma, eps);
  ValueFunction v = mdp.reward;
  for (std::size_t it = 1; it <= kMaxSweeps; ++it) {
    const auto q = q_from_value(mdp, v, gamma);
    auto policy = greedy_policy(q);
    auto next = max_over_actions(q, mdp.num_states());
    const double residual = sup_diff(next, v);
    if (trace) trace->residuals.push_back(residual);
    if (residual <= threshold) return {std::move(policy), std::move(next), residual, it};
    // Partial evaluation: the greedy backup above is the first of m.
    for (std::size_t k = 1; k < m; ++k) next = policy_backup(mdp, policy, gamma, next);
    v = std::move(next);
  }
  throw Error(ErrorKind::Numeric, "modified policy iteration did not converge");
}

ReachabilityResult goal_reachability(const FlatMdp& mdp, const StateSet& goal) {
  if (goal.empty()) throw Error(ErrorKind::Argument, "goal set must be nonempty");
  const auto n = mdp.num_states();
  ValueFunction v(n, 0.0);
  for (auto g : goal) v.at(g) = 1.0;
  ReachabilityResult out;
  for (std::size_t k = 1; k <= n; ++k) {
    ValueFunction next(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      if (goal.count(s)) {
        next[s] = 1.0;
        continue;
      }
      double best = 0.0;
      for (std::size_t a = 0; a < mdp.num_actions(); ++a)
        best = std::max(best, expected_next(mdp.transitions(a), s, v));
      next[s] = best;
    }
    out.k_used = k;
    const bool fixpoint = next == v;
    v = std::move(next);
    if (fixpoint) break;
  }
  out.reach_prob = std::move(v);
  return out;
}

}  // namespace dtp
