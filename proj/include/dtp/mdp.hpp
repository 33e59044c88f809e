#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

namespace dtp {

/// Row-major sparse transition matrix; row i is Pr(. | s_i).
using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Per-state values, indexed like FlatMdp::states.
using ValueFunction = std::vector<double>;

inline constexpr double kStochasticTol = 1e-9;

struct FiniteHorizon {
  int steps = 1;
};

struct Discounted {
  double gamma = 0.9;
};

using Criterion = std::variant<FiniteHorizon, Discounted>;

struct ActionRecord {
  std::string name;
  Matrix matrix;
  double default_cost = 0.0;
  std::map<std::size_t, double> cost_overrides;

  double cost(std::size_t state) const {
    auto it = cost_overrides.find(state);
    return it == cost_overrides.end() ? default_cost : it->second;
  }
};

/// Enumerated MDP. Solvers read the cost through cost(a, s) and add it to
/// the backup; trajectory valuation subtracts it.
struct FlatMdp {
  std::vector<std::string> states;
  std::vector<ActionRecord> actions;
  std::vector<double> reward;
  Criterion criterion = Discounted{0.9};
  std::optional<std::vector<double>> initial;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_actions() const { return actions.size(); }
  double cost(std::size_t action, std::size_t state) const {
    return actions[action].cost(state);
  }
  const Matrix& transitions(std::size_t action) const {
    return actions[action].matrix;
  }

  std::optional<std::size_t> find_state(std::string_view name) const;
  std::optional<std::size_t> find_action(std::string_view name) const;
  // Throw ErrorKind::Argument for unknown names.
  std::size_t state_index(std::string_view name) const;
  std::size_t action_index(std::string_view name) const;
};

Matrix dense_to_matrix(const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> matrix_to_dense(const Matrix& m);
Matrix identity_matrix(std::size_t n);
double row_sum(const Matrix& m, std::size_t row);

struct ValidationIssue {
  std::string location;  // e.g. "action Clk, row 3"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

ValidationReport validate_mdp(const FlatMdp& mdp);

// ---------------------------------------------------------------------------
// Trajectories

struct Step {
  std::size_t state = 0;
  std::size_t action = 0;
  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;
  std::size_t final_state = 0;
  std::optional<std::vector<std::size_t>> observations;
  bool operator==(const Trajectory&) const = default;
};

/// Average reward over the first `length` stages of a trajectory.
struct GainPrefix {
  std::size_t length = 1;
};

using TrajectoryCriterion = std::variant<FiniteHorizon, Discounted, GainPrefix>;

double evaluate_trajectory(const Trajectory& traj, const FlatMdp& mdp,
                           const TrajectoryCriterion& criterion);

// ---------------------------------------------------------------------------
// Policies

struct StationaryPolicy {
  std::vector<std::size_t> action;  // per state
  bool operator==(const StationaryPolicy&) const = default;
};

/// action[t][s] is the choice with t stages to go; row 0 is unused.
struct NonstationaryPolicy {
  std::vector<std::vector<std::size_t>> action;
  std::size_t horizon() const { return action.empty() ? 0 : action.size() - 1; }
  bool operator==(const NonstationaryPolicy&) const = default;
};

std::vector<double> propagate_distribution(std::span<const double> dist,
                                           const FlatMdp& mdp,
                                           const StationaryPolicy& policy,
                                           std::size_t n);

// ---------------------------------------------------------------------------
// Sampling

/// splitmix64 stream (Steele, Lea, Flood). Uniform doubles use the top 53 bits.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Inverse-CDF draw over the row, scanning columns in index order.
std::size_t sample_successor(const Matrix& m, std::size_t row, SplitMix64& rng);

Trajectory simulate_policy(const FlatMdp& mdp, const StationaryPolicy& policy,
                           std::size_t start, std::size_t steps,
                           std::uint64_t seed);
/// Step k (0-based) uses the choice for steps - k stages to go.
Trajectory simulate_policy(const FlatMdp& mdp, const NonstationaryPolicy& policy,
                           std::size_t start, std::size_t steps,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Observations and beliefs

struct ObservationModel {
  std::vector<std::string> observations;
  /// (prior state, action, post state) -> distribution over observations.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<double>>
      prob;

  const std::vector<double>* find(std::size_t from, std::size_t action,
                                  std::size_t to) const;
  std::optional<std::size_t> find_observation(std::string_view name) const;
};

ValidationReport validate_observation_model(const ObservationModel& om,
                                            const FlatMdp& mdp);

/// O = S with Pr(o | ., ., s_j) = 1 iff o = s_j.
ObservationModel full_observability(const FlatMdp& mdp);

struct BeliefState {
  std::vector<double> probs;
};

BeliefState belief_update(const BeliefState& b, std::size_t action,
                          std::size_t obs, const FlatMdp& mdp,
                          const ObservationModel& om);

}  // namespace dtp
