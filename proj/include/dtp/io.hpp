#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtp/abstraction.hpp"
#include "dtp/chain.hpp"
#include "dtp/events.hpp"
#include "dtp/factored.hpp"
#include "dtp/mdp.hpp"
#include "dtp/minimization.hpp"
#include "dtp/solvers.hpp"
#include "dtp/structured_vi.hpp"

namespace dtp {

struct Diagnostic {
  std::size_t line = 0;    // 1-based
  std::size_t column = 0;  // 1-based
  std::string message;

  std::string str() const;
};

/// Thrown by the parsers; carries every diagnostic found.
class ParseError : public Error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// A flat document may also declare exogenous events for compose-events.
struct FlatDocument {
  FlatMdp mdp;
  std::vector<ExogenousEvent> events;
};

FlatDocument parse_flat_document(std::string_view text);
FlatMdp parse_flat(std::string_view text);
FactoredMdp parse_factored(std::string_view text);

/// Factored text starts with '(' after whitespace and comments.
bool looks_factored(std::string_view text);

std::string format_real(double v);       // fixed, 6 decimals
std::string format_real_exact(double v); // shortest round-trip form

std::string emit_flat(const FlatMdp& mdp, const std::vector<ExogenousEvent>& events = {});
std::string emit_factored(const FactoredMdp& fmdp);

std::string emit_values(const FlatMdp& mdp, const ValueFunction& v);
std::string emit_policy(const FlatMdp& mdp, const StationaryPolicy& p);
std::string emit_finite_solution(const FlatMdp& mdp, const FiniteSolution& sol);
std::string emit_chain_structure(const FlatMdp& mdp, const ChainStructure& cs);
std::string emit_trajectory(const FlatMdp& mdp, const Trajectory& t);
std::string emit_partition(const FlatMdp& mdp, const Partition& p);

std::string emit_value_tree(const ValueTree& t, const std::vector<VariableSpec>& vars);
std::string emit_interval_tree(const IntervalTree& t, const std::vector<VariableSpec>& vars);
std::string emit_policy_tree(const PolicyTree& t, const FactoredMdp& fmdp);

/// Reads "state : action" lines.
StationaryPolicy parse_policy(std::string_view text, const FlatMdp& mdp);

}  // namespace dtp
