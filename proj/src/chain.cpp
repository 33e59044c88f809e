#include "dtp/chain.hpp"

#include <algorithm>
#include <limits>

#include "dtp/error.hpp"

namespace dtp {

MarkovChain induce_chain(const FlatMdp& mdp, const StationaryPolicy& policy) {
  const auto n = mdp.num_states();
  if (policy.action.size() != n)
    throw Error(ErrorKind::Argument, "policy is not total over the state set");
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = mdp.transitions(policy.action.at(i));
    for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it)
      entries.emplace_back(static_cast<Eigen::Index>(i), it.col(), it.value());
  }
  Matrix chain(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  chain.setFromTriplets(entries.begin(), entries.end());
  chain.makeCompressed();
  return {mdp.states, std::move(chain)};
}

std::vector<std::vector<std::size_t>> strongly_connected_components(const Matrix& m,
                                                                    double eps) {
  // Iterative Tarjan.
  const auto n = static_cast<std::size_t>(m.rows());
  constexpr auto kUnvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i < n; ++i)
    for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it)
      if (it.value() > eps) succ[i].push_back(static_cast<std::size_t>(it.col()));

  struct Frame {
    std::size_t node;
    std::size_t next_child;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    std::vector<Frame> work{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!work.empty()) {
      auto& f = work.back();
      if (f.next_child < succ[f.node].size()) {
        const auto w = succ[f.node][f.next_child++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const auto v = f.node;
      work.pop_back();
      if (!work.empty()) low[work.back().node] = std::min(low[work.back().node], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  return components;
}

ChainStructure classify_chain(const MarkovChain& chain, double eps) {
  if (eps < 0.0) throw Error(ErrorKind::Argument, "eps must be nonnegative");
  const auto& m = chain.matrix;
  const auto n = static_cast<std::size_t>(m.rows());
  auto components = strongly_connected_components(m, eps);

  std::vector<std::size_t> comp_of(n);
  for (std::size_t c = 0; c < components.size(); ++c)
    for (auto s : components[c]) comp_of[s] = c;

  ChainStructure out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    bool sink = true;
    for (auto s : components[c]) {
      for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(s)); it; ++it)
        if (it.value() > eps && comp_of[it.col()] != c) {
          sink = false;
          break;
        }
      if (!sink) break;
    }
    if (sink) {
      out.recurrent_classes.emplace_back(components[c].begin(), components[c].end());
    } else {
      out.transient.insert(components[c].begin(), components[c].end());
    }
  }
  std::sort(out.recurrent_classes.begin(), out.recurrent_classes.end(),
            [](const StateSet& a, const StateSet& b) { return *a.begin() < *b.begin(); });
  for (const auto& cls : out.recurrent_classes) {
    if (cls.size() != 1) continue;
    const auto s = *cls.begin();
    if (m.coeff(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) >= 1.0 - eps)
      out.absorbing.insert(s);
  }
  return out;
}

bool is_closed(const MarkovChain& chain, const StateSet& subset, double eps) {
  if (subset.empty()) throw Error(ErrorKind::Argument, "subset must be nonempty");
  for (auto s : subset) {
    double leaving = 0.0;
    for (Matrix::InnerIterator it(chain.matrix, static_cast<Eigen::Index>(s)); it; ++it)
      if (!subset.count(static_cast<std::size_t>(it.col()))) leaving += it.value();
    if (leaving > eps) return false;
  }
  return true;
}

}  // namespace dtp
