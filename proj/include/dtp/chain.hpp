#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "dtp/mdp.hpp"

namespace dtp {

using StateSet = std::set<std::size_t>;

struct MarkovChain {
  std::vector<std::string> states;
  Matrix matrix;
};

/// Recurrent classes are listed by their smallest member.
struct ChainStructure {
  std::vector<StateSet> recurrent_classes;
  StateSet transient;
  StateSet absorbing;
};

MarkovChain induce_chain(const FlatMdp& mdp, const StationaryPolicy& policy);

/// Sink strongly connected components of the arc graph (entries > eps) are
/// the recurrent classes; everything else is transient.
ChainStructure classify_chain(const MarkovChain& chain, double eps = 0.0);

bool is_closed(const MarkovChain& chain, const StateSet& subset, double eps = 0.0);

/// Strongly connected components, each sorted, in reverse topological order
/// (sinks first) of the condensation.
std::vector<std::vector<std::size_t>> strongly_connected_components(
    const Matrix& m, double eps = 0.0);

}  // namespace dtp
