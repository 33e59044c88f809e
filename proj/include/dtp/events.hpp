#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtp/mdp.hpp"

namespace dtp {

/// An uncontrolled transition source: its effect in isolation plus the
/// per-state probability that it occurs.
struct ExogenousEvent {
  std::string name;
  Matrix matrix;
  std::vector<double> occurrence;
};

ValidationReport validate_event(const ExogenousEvent& e);

/// diag(occ) * Pr_e + diag(1 - occ).
Matrix effective_event_matrix(const ExogenousEvent& e);

struct CommutativityWitness {
  std::size_t first = 0;   // event indices
  std::size_t second = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double discrepancy = 0.0;
};

struct CommutativityReport {
  bool commutative = true;
  std::optional<CommutativityWitness> witness;  // worst entry of the first failing pair
};

CommutativityReport check_commutative(std::span<const ExogenousEvent> events,
                                      double tol = 1e-12);

struct CompileOptions {
  /// Accept the given order even when the events do not commute.
  bool explicit_order = false;
  double commute_tol = 1e-12;
};

/// Implicit-event action: the action moves first, then each event in list
/// order, i.e. Pr_a * P_e1 * ... * P_en on row-vector distributions.
ActionRecord compile_implicit_action(const ActionRecord& action,
                                     std::span<const ExogenousEvent> events,
                                     const CompileOptions& options = {});

}  // namespace dtp
