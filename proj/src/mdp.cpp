#include "dtp/mdp.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "dtp/error.hpp"

namespace dtp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Length: return "length";
    case ErrorKind::Criterion: return "criterion";
    case ErrorKind::ImpossibleObservation: return "impossible-observation";
    case ErrorKind::CompositionOrder: return "composition-order";
    case ErrorKind::MalformedTree: return "malformed-tree";
    case ErrorKind::Size: return "size";
    case ErrorKind::UnsupportedStructure: return "unsupported-structure";
    case ErrorKind::Closure: return "closure";
    case ErrorKind::Stability: return "stability";
    case ErrorKind::Leakage: return "leakage";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

std::optional<std::size_t> FlatMdp::find_state(std::string_view name) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> FlatMdp::find_action(std::string_view name) const {
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].name == name) return i;
  return std::nullopt;
}

std::size_t FlatMdp::state_index(std::string_view name) const {
  if (auto i = find_state(name)) return *i;
  throw Error(ErrorKind::Argument, "unknown state '" + std::string(name) + "'");
}

std::size_t FlatMdp::action_index(std::string_view name) const {
  if (auto i = find_action(name)) return *i;
  throw Error(ErrorKind::Argument, "unknown action '" + std::string(name) + "'");
}

Matrix dense_to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(rows[i].size()); ++j)
      if (rows[i][j] != 0.0) entries.emplace_back(i, j, rows[i][j]);
  Matrix m(n, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

std::vector<std::vector<double>> matrix_to_dense(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols(), 0.0));
  for (Eigen::Index i = 0; i < m.outerSize(); ++i)
    for (Matrix::InnerIterator it(m, i); it; ++it) out[i][it.col()] = it.value();
  return out;
}

Matrix identity_matrix(std::size_t n) {
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setIdentity();
  m.makeCompressed();
  return m;
}

double row_sum(const Matrix& m, std::size_t row) {
  double s = 0.0;
  for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(row)); it; ++it)
    s += it.value();
  return s;
}

ValidationReport validate_mdp(const FlatMdp& mdp) {
  ValidationReport report;
  auto issue = [&](std::string where, std::string what) {
    report.issues.push_back({std::move(where), std::move(what)});
  };
  const auto n = mdp.num_states();

  std::set<std::string_view> seen;
  for (const auto& s : mdp.states)
    if (!seen.insert(s).second) issue("state " + s, "duplicate state id '" + s + "'");
  seen.clear();
  for (const auto& a : mdp.actions)
    if (!seen.insert(a.name).second)
      issue("action " + a.name, "duplicate action id '" + a.name + "'");

  if (mdp.reward.size() != n)
    issue("reward", "reward has " + std::to_string(mdp.reward.size()) +
                        " entries for " + std::to_string(n) + " states");

  if (const auto* fh = std::get_if<FiniteHorizon>(&mdp.criterion); fh && fh->steps < 1)
    issue("criterion", "horizon must be positive");
  if (const auto* d = std::get_if<Discounted>(&mdp.criterion);
      d && !(d->gamma >= 0.0 && d->gamma < 1.0))
    issue("criterion", "discount must lie in [0, 1)");

  for (const auto& a : mdp.actions) {
    const auto& m = a.matrix;
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
      issue("action " + a.name, "matrix is " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + ", expected " +
                                    std::to_string(n) + "x" + std::to_string(n));
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it) {
        sum += it.value();
        if (!(it.value() >= 0.0 && it.value() <= 1.0)) {
          std::ostringstream os;
          os << "entry " << it.value() << " outside [0,1] at column " << it.col();
          issue("action " + a.name + ", row " + std::to_string(i), os.str());
        }
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "row sum " << sum << " != 1";
        issue("action " + a.name + ", row " + std::to_string(i), os.str());
      }
    }
    for (const auto& [s, c] : a.cost_overrides)
      if (s >= n) issue("action " + a.name, "cost override for unknown state index " + std::to_string(s));
  }

  if (mdp.initial) {
    if (mdp.initial->size() != n) {
      issue("init", "initial distribution has wrong length");
    } else {
      double sum = 0.0;
      for (double p : *mdp.initial) {
        sum += p;
        if (!(p >= 0.0 && p <= 1.0)) issue("init", "initial probability outside [0,1]");
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "initial distribution sums to " << sum;
        issue("init", os.str());
      }
    }
  }
  return report;
}

double evaluate_trajectory(const Trajectory& traj, const FlatMdp& mdp,
                           const TrajectoryCriterion& criterion) {
  auto stage = [&](const Step& st) {
    return mdp.reward[st.state] - mdp.cost(st.action, st.state);
  };
  auto state_at = [&](std::size_t t) {
    return t < traj.steps.size() ? traj.steps[t].state : traj.final_state;
  };

  if (const auto* fh = std::get_if<FiniteHorizon>(&criterion)) {
    if (fh->steps < 0 || traj.steps.size() < static_cast<std::size_t>(fh->steps))
      throw Error(ErrorKind::Length,
                  "trajectory has " + std::to_string(traj.steps.size()) +
                      " steps, horizon needs " + std::to_string(fh->steps));
    const auto horizon = static_cast<std::size_t>(fh->steps);
    double v = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) v += stage(traj.steps[t]);
    return v + mdp.reward[state_at(horizon)];
  }
  if (const auto* d = std::get_if<Discounted>(&criterion)) {
    double v = 0.0;
    double weight = 1.0;
    for (const auto& st : traj.steps) {
      v += weight * stage(st);
      weight *= d->gamma;
    }
    return v;
  }
  const auto& gain = std::get<GainPrefix>(criterion);
  if (gain.length == 0 || traj.steps.size() < gain.length)
    throw Error(ErrorKind::Length, "gain prefix of length " + std::to_string(gain.length) +
                                       " exceeds trajectory of " +
                                       std::to_string(traj.steps.size()) + " steps");
  double total = 0.0;
  for (std::size_t t = 0; t < gain.length; ++t) total += stage(traj.steps[t]);
  return total / static_cast<double>(gain.length);
}

std::vector<double> propagate_distribution(std::span<const double> dist,
                                           const FlatMdp& mdp,
                                           const StationaryPolicy& policy,
                                           std::size_t n) {
  std::vector<double> cur(dist.begin(), dist.end());
  std::vector<double> next(cur.size());
  for (std::size_t step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i] == 0.0) continue;
      const auto& m = mdp.transitions(policy.action[i]);
      for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it)
        next[it.col()] += cur[i] * it.value();
    }
    cur.swap(next);
  }
  return cur;
}

std::size_t sample_successor(const Matrix& m, std::size_t row, SplitMix64& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last = row;
  for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(row)); it; ++it) {
    if (it.value() <= 0.0) continue;
    cum += it.value();
    last = static_cast<std::size_t>(it.col());
    if (u < cum) return last;
  }
  // Rounding left u above the accumulated mass: take the last positive entry.
  return last;
}

namespace {

template <class ChooseAction>
Trajectory run_simulation(const FlatMdp& mdp, std::size_t start, std::size_t steps,
                          std::uint64_t seed, ChooseAction choose) {
  if (start >= mdp.num_states())
    throw Error(ErrorKind::Argument, "start state out of range");
  SplitMix64 rng(seed);
  Trajectory traj;
  traj.steps.reserve(steps);
  std::size_t s = start;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t a = choose(s, k);
    traj.steps.push_back({s, a});
    s = sample_successor(mdp.transitions(a), s, rng);
  }
  traj.final_state = s;
  return traj;
}

}  // namespace

Trajectory simulate_policy(const FlatMdp& mdp, const StationaryPolicy& policy,
                           std::size_t start, std::size_t steps, std::uint64_t seed) {
  return run_simulation(mdp, start, steps, seed,
                        [&](std::size_t s, std::size_t) { return policy.action[s]; });
}

Trajectory simulate_policy(const FlatMdp& mdp, const NonstationaryPolicy& policy,
                           std::size_t start, std::size_t steps, std::uint64_t seed) {
  if (policy.horizon() < steps)
    throw Error(ErrorKind::Argument, "nonstationary policy horizon " +
                                         std::to_string(policy.horizon()) +
                                         " shorter than " + std::to_string(steps) +
                                         " steps");
  return run_simulation(mdp, start, steps, seed, [&](std::size_t s, std::size_t k) {
    return policy.action[steps - k][s];
  });
}

const std::vector<double>* ObservationModel::find(std::size_t from, std::size_t action,
                                                  std::size_t to) const {
  auto it = prob.find({from, action, to});
  return it == prob.end() ? nullptr : &it->second;
}

std::optional<std::size_t> ObservationModel::find_observation(std::string_view name) const {
  for (std::size_t i = 0; i < observations.size(); ++i)
    if (observations[i] == name) return i;
  return std::nullopt;
}

ValidationReport validate_observation_model(const ObservationModel& om,
                                            const FlatMdp& mdp) {
  ValidationReport report;
  for (const auto& [key, dist] : om.prob) {
    const auto& [i, k, j] = key;
    std::ostringstream where;
    where << "observation (" << i << ", " << k << ", " << j << ")";
    if (dist.size() != om.observations.size()) {
      report.issues.push_back({where.str(), "distribution has wrong length"});
      continue;
    }
    double sum = 0.0;
    for (double p : dist) sum += p;
    if (std::abs(sum - 1.0) > kStochasticTol)
      report.issues.push_back({where.str(), "distribution sums to " + std::to_string(sum)});
  }
  for (std::size_t k = 0; k < mdp.num_actions(); ++k) {
    const auto& m = mdp.transitions(k);
    for (Eigen::Index i = 0; i < m.outerSize(); ++i)
      for (Matrix::InnerIterator it(m, i); it; ++it)
        if (it.value() > 0.0 && !om.find(i, k, it.col())) {
          std::ostringstream where;
          where << "observation (" << i << ", " << k << ", " << it.col() << ")";
          report.issues.push_back({where.str(), "missing distribution for a possible transition"});
        }
  }
  return report;
}

ObservationModel full_observability(const FlatMdp& mdp) {
  ObservationModel om;
  om.observations = mdp.states;
  const auto n = mdp.num_states();
  for (std::size_t k = 0; k < mdp.num_actions(); ++k) {
    const auto& m = mdp.transitions(k);
    for (Eigen::Index i = 0; i < m.outerSize(); ++i)
      for (Matrix::InnerIterator it(m, i); it; ++it) {
        std::vector<double> dist(n, 0.0);
        dist[it.col()] = 1.0;
        om.prob[{static_cast<std::size_t>(i), k, static_cast<std::size_t>(it.col())}] =
            std::move(dist);
      }
  }
  return om;
}

BeliefState belief_update(const BeliefState& b, std::size_t action, std::size_t obs,
                          const FlatMdp& mdp, const ObservationModel& om) {
  if (obs >= om.observations.size())
    throw Error(ErrorKind::Argument, "unknown observation index " + std::to_string(obs));
  const auto& m = mdp.transitions(action);
  std::vector<double> post(mdp.num_states(), 0.0);
  for (std::size_t i = 0; i < b.probs.size(); ++i) {
    if (b.probs[i] == 0.0) continue;
    for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it) {
      const auto* dist = om.find(i, action, it.col());
      if (!dist) continue;
      post[it.col()] += b.probs[i] * it.value() * (*dist)[obs];
    }
  }
  double total = 0.0;
  for (double p : post) total += p;
  if (!(total > 0.0))
    throw Error(ErrorKind::ImpossibleObservation,
                "observation '" + om.observations[obs] + "' has zero probability under the belief");
  for (double& p : post) p /= total;
  return {std::move(post)};
}

}  // namespace dtp
