#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// Nothing here calls the library's solvers; the oracles work on dense arrays.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dtp/events.hpp"
#include "dtp/factored.hpp"
#include "dtp/mdp.hpp"

namespace dtp::test {

using Rng = std::mt19937_64;

std::string data_path(const std::string& name);
std::string read_file(const std::string& path);

// Dense copy of a model: p[a][s][s'], r[s], c[a][s].
struct Dense {
  std::vector<std::vector<std::vector<double>>> p;
  std::vector<double> r;
  std::vector<std::vector<double>> c;

  std::size_t states() const { return r.size(); }
  std::size_t actions() const { return p.size(); }
};

Dense dense_from_flat(const FlatMdp& mdp);

// Brute-force grounding of a net-only model: each transition probability is
// the product of the per-variable CPT entries.
Dense dense_from_nets(const FactoredMdp& fmdp);

// q[a][s] = r + c + gamma * sum p v, summed in plain index order.
std::vector<std::vector<double>> dense_q(const Dense& m, const std::vector<double>& v,
                                         double gamma);
std::vector<double> dense_max(const std::vector<std::vector<double>>& q);

// Runs `sweeps` Bellman backups from V = R; returns every iterate.
std::vector<std::vector<double>> dense_vi(const Dense& m, double gamma, std::size_t sweeps);

// Actions within tol of the best at state s.
std::vector<std::size_t> dense_argmax(const std::vector<std::vector<double>>& q,
                                      std::size_t s, double tol);

// Random stochastic row with `support` nonzeros.
std::vector<double> random_row(Rng& rng, std::size_t n, std::size_t support);

FlatMdp random_mdp(Rng& rng, std::size_t n, std::size_t a, double gamma,
                   std::size_t support = 3);

// Random simple-net model over binary variables. Some CPT leaves are made
// deterministic so the regression skip case is exercised.
FactoredMdp random_simple_net_mdp(Rng& rng, std::size_t vars, std::size_t actions);

DistTree random_cpt(Rng& rng, std::size_t var, std::size_t nvars, std::size_t max_tests);
ScalarTree random_scalar_tree(Rng& rng, const std::vector<std::size_t>& vars,
                              double lo, double hi, bool integer_leaves);

// Samples one interleaved step: the action moves first, then every event in
// turn fires with its occurrence probability at the current state.
struct DenseEvent {
  std::vector<std::vector<double>> p;
  std::vector<double> occurrence;
};

DenseEvent dense_event(const ExogenousEvent& e);

std::size_t interleave_step(const std::vector<double>& action_row,
                            const std::vector<DenseEvent>& events, Rng& rng);

// Three-stage values of the sixteen-state robot: partial states over (M, RHM, CR, RHC)
// with -1 for an unconstrained variable.
struct ValueTableRow {
  std::string label;
  std::vector<int> pattern;  // values as indices into (t f)
  double v1;
  std::string a1;  // "any" for a tie over every action
  double v2;
  std::string a2;
};

const std::vector<ValueTableRow>& office_value_table();

// Every full state index of the sixteen-state robot matching the pattern.
std::vector<std::size_t> matching_states(const FactoredMdp& fmdp, const std::vector<int>& pattern);

// The 20-state model of the trajectory example: Loc x M x RHM with Stay, Clk,
// Cclk, PUM and DelM; reward 10 where M and RHM are both false; cost 1 for
// every action except Stay.
struct TrajectoryExample {
  FlatMdp mdp;
  Trajectory trajectory;
};

TrajectoryExample trajectory_example();

// Twelve random states, each cloned; every row splits its mass evenly
// between a destination and its clone.
struct Duplicated {
  FlatMdp base;
  FlatMdp doubled;
};

Duplicated duplicated_mdp(Rng& rng, std::size_t n);

}  // namespace dtp::test
