#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dtp::test {

std::string data_path(const std::string& name) { return std::string(DTP_DATA_DIR) + "/" + name; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dense dense_from_flat(const FlatMdp& mdp) {
  Dense d;
  d.r = mdp.reward;
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    d.p.push_back(matrix_to_dense(mdp.transitions(a)));
    std::vector<double> c(mdp.num_states());
    for (std::size_t s = 0; s < c.size(); ++s) c[s] = mdp.cost(a, s);
    d.c.push_back(std::move(c));
  }
  return d;
}

namespace {

// Lexicographic decoding, first variable most significant.
std::vector<int> decode(std::size_t index, const std::vector<VariableSpec>& vars) {
  std::vector<int> out(vars.size());
  for (std::size_t i = vars.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % vars[i].size());
    index /= vars[i].size();
  }
  return out;
}

}  // namespace

Dense dense_from_nets(const FactoredMdp& fmdp) {
  const auto& vars = fmdp.variables;
  std::size_t n = 1;
  for (const auto& v : vars) n *= v.size();
  Dense d;
  d.r.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto x = decode(s, vars);
    for (const auto& comp : fmdp.reward) d.r[s] += comp.evaluate(x);
  }
  for (const auto& action : fmdp.actions) {
    const auto& net = std::get<TwoSliceNet>(action);
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    std::vector<double> c(n);
    for (std::size_t s = 0; s < n; ++s) {
      const auto x = decode(s, vars);
      c[s] = net.cost_tree ? net.cost_tree->evaluate(x) : net.cost;
      for (std::size_t t = 0; t < n; ++t) {
        const auto y = decode(t, vars);
        double prob = 1.0;
        for (std::size_t v = 0; v < vars.size() && prob > 0.0; ++v)
          prob *= net.cpts[v].evaluate(x, y)[static_cast<std::size_t>(y[v])];
        p[s][t] = prob;
      }
    }
    d.p.push_back(std::move(p));
    d.c.push_back(std::move(c));
  }
  return d;
}

std::vector<std::vector<double>> dense_q(const Dense& m, const std::vector<double>& v,
                                         double gamma) {
  std::vector<std::vector<double>> q(m.actions(), std::vector<double>(m.states()));
  for (std::size_t a = 0; a < m.actions(); ++a)
    for (std::size_t s = 0; s < m.states(); ++s) {
      double e = 0.0;
      for (std::size_t t = 0; t < m.states(); ++t) e += m.p[a][s][t] * v[t];
      q[a][s] = m.r[s] + m.c[a][s] + gamma * e;
    }
  return q;
}

std::vector<double> dense_max(const std::vector<std::vector<double>>& q) {
  std::vector<double> out = q.at(0);
  for (const auto& row : q)
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = std::max(out[s], row[s]);
  return out;
}

std::vector<std::vector<double>> dense_vi(const Dense& m, double gamma, std::size_t sweeps) {
  std::vector<std::vector<double>> out{m.r};
  for (std::size_t k = 0; k < sweeps; ++k) out.push_back(dense_max(dense_q(m, out.back(), gamma)));
  return out;
}

std::vector<std::size_t> dense_argmax(const std::vector<std::vector<double>>& q, std::size_t s,
                                      double tol) {
  double best = q[0][s];
  for (const auto& row : q) best = std::max(best, row[s]);
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < q.size(); ++a)
    if (q[a][s] >= best - tol) out.push_back(a);
  return out;
}

std::vector<double> random_row(Rng& rng, std::size_t n, std::size_t support) {
  support = std::clamp<std::size_t>(support, 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> row(n, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < support; ++k) total += row[idx[k]] = u(rng);
  for (auto& x : row) x /= total;
  return row;
}

FlatMdp random_mdp(Rng& rng, std::size_t n, std::size_t a, double gamma, std::size_t support) {
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::uniform_real_distribution<double> cost(-0.5, 0.0);
  std::bernoulli_distribution override_cost(0.25);
  FlatMdp mdp;
  for (std::size_t s = 0; s < n; ++s) {
    mdp.states.push_back("s" + std::to_string(s));
    mdp.reward.push_back(reward(rng));
  }
  for (std::size_t k = 0; k < a; ++k) {
    ActionRecord rec;
    rec.name = "a" + std::to_string(k);
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < n; ++s) rows.push_back(random_row(rng, n, support));
    rec.matrix = dense_to_matrix(rows);
    rec.default_cost = cost(rng);
    for (std::size_t s = 0; s < n; ++s)
      if (override_cost(rng)) rec.cost_overrides[s] = cost(rng);
    mdp.actions.push_back(std::move(rec));
  }
  mdp.criterion = Discounted{gamma};
  return mdp;
}

namespace {

template <class L, class MakeLeaf>
DecisionTree<L> random_tree(Rng& rng, std::vector<std::size_t> candidates, std::size_t tests_left,
                            MakeLeaf&& make_leaf) {
  std::bernoulli_distribution stop(0.3);
  if (tests_left == 0 || candidates.empty() || stop(rng)) return DecisionTree<L>::leaf(make_leaf());
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const auto k = pick(rng);
  const auto var = candidates[k];
  candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<DecisionTree<L>> kids;
  for (int v = 0; v < 2; ++v) kids.push_back(random_tree<L>(rng, candidates, tests_left - 1, make_leaf));
  return DecisionTree<L>::node(VarTest{var, false}, std::move(kids));
}

}  // namespace

DistTree random_cpt(Rng& rng, std::size_t var, std::size_t nvars, std::size_t max_tests) {
  std::vector<std::size_t> parents{var};
  std::bernoulli_distribution include(2.0 / static_cast<double>(std::max<std::size_t>(nvars, 2)));
  for (std::size_t v = 0; v < nvars; ++v)
    if (v != var && include(rng)) parents.push_back(v);
  std::bernoulli_distribution certain(0.2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto leaf = [&]() -> Distribution {
    if (certain(rng)) return u(rng) < 0.5 ? Distribution{1.0, 0.0} : Distribution{0.0, 1.0};
    const double p = u(rng);
    return {p, 1.0 - p};
  };
  return random_tree<Distribution>(rng, parents, max_tests, leaf);
}

ScalarTree random_scalar_tree(Rng& rng, const std::vector<std::size_t>& vars, double lo, double hi,
                              bool integer_leaves) {
  std::uniform_real_distribution<double> u(lo, hi);
  auto leaf = [&] {
    const double x = u(rng);
    return integer_leaves ? std::round(x) : x;
  };
  return random_tree<double>(rng, vars, vars.size(), leaf);
}

FactoredMdp random_simple_net_mdp(Rng& rng, std::size_t nvars, std::size_t nactions) {
  FactoredMdp f;
  for (std::size_t v = 0; v < nvars; ++v) f.variables.push_back({"X" + std::to_string(v), {"t", "f"}});
  std::uniform_int_distribution<std::size_t> pick(0, nvars - 1);
  std::uniform_int_distribution<int> ncomp(1, 3);
  const int components = ncomp(rng);
  for (int k = 0; k < components; ++k) {
    std::vector<std::size_t> scope{pick(rng)};
    const auto second = pick(rng);
    if (second != scope[0]) scope.push_back(second);
    f.reward.push_back(random_scalar_tree(rng, scope, 0.0, 5.0, true));
  }
  std::uniform_real_distribution<double> cost(-1.0, 0.0);
  std::bernoulli_distribution cost_tree(0.25);
  for (std::size_t a = 0; a < nactions; ++a) {
    TwoSliceNet net;
    net.name = "a" + std::to_string(a);
    net.cost = std::round(cost(rng) * 4.0) / 4.0;
    if (cost_tree(rng)) net.cost_tree = random_scalar_tree(rng, {pick(rng)}, -1.0, 0.0, false);
    for (std::size_t v = 0; v < nvars; ++v) net.cpts.push_back(random_cpt(rng, v, nvars, 3));
    f.actions.emplace_back(std::move(net));
  }
  return f;
}

DenseEvent dense_event(const ExogenousEvent& e) { return {matrix_to_dense(e.matrix), e.occurrence}; }

namespace {

std::size_t draw(const std::vector<double>& row, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    cum += row[j];
    last = j;
    if (x < cum) return j;
  }
  return last;
}

}  // namespace

std::size_t interleave_step(const std::vector<double>& action_row,
                            const std::vector<DenseEvent>& events, Rng& rng) {
  std::size_t s = draw(action_row, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& e : events)
    if (u(rng) < e.occurrence[s]) s = draw(e.p[s], rng);
  return s;
}

const std::vector<ValueTableRow>& office_value_table() {
  // Patterns over (M, RHM, CR, RHC); 0 is t, 1 is f.
  static const std::vector<ValueTableRow> rows{
      {"s0", {0, 1, 0, 1}, 0.0, "any", 1.0, "PUM"},
      {"s1", {0, 0, 0, 1}, 1.0, "DelM", 2.0, "DelM"},
      {"s2", {0, 1, 0, 0}, 0.9, "DelC", 2.43, "DelC"},
      {"s3", {0, 0, 0, 0}, 1.0, "DelM", 2.9, "DelM"},
      {"s4", {1, -1, 0, 0}, 2.9, "DelC", 5.43, "DelC"},
      {"s5", {1, -1, 0, 1}, 2.0, "any", 3.9, "GetC"},
      {"s6", {0, 0, 1, -1}, 7.0, "DelM", 11.0, "DelM"},
      {"s7", {0, 1, 1, -1}, 6.0, "any", 10.0, "PUM"},
      {"s8", {1, -1, 1, -1}, 8.0, "any", 12.0, "any"},
  };
  return rows;
}

std::vector<std::size_t> matching_states(const FactoredMdp& fmdp, const std::vector<int>& pattern) {
  std::vector<std::size_t> out;
  const auto n = fmdp.state_count();
  for (std::size_t s = 0; s < n; ++s) {
    const auto x = decode(s, fmdp.variables);
    bool ok = true;
    for (std::size_t v = 0; v < pattern.size(); ++v) ok = ok && (pattern[v] < 0 || pattern[v] == x[v]);
    if (ok) out.push_back(s);
  }
  return out;
}

TrajectoryExample trajectory_example() {
  const std::vector<std::string> locs{"M", "C", "H", "O", "L"};
  auto index = [](std::size_t loc, bool m, bool rhm) { return loc * 4 + (m ? 0 : 2) + (rhm ? 0 : 1); };
  FlatMdp mdp;
  mdp.reward.assign(20, 0.0);
  mdp.states.resize(20);
  for (std::size_t l = 0; l < 5; ++l)
    for (bool m : {true, false})
      for (bool rhm : {true, false}) {
        const auto s = index(l, m, rhm);
        mdp.states[s] = "Loc" + locs[l] + (m ? "_M" : "_nM") + (rhm ? "_RHM" : "_nRHM");
        if (!m && !rhm) mdp.reward[s] = 10.0;
      }
  auto action = [&](const std::string& name, double cost, auto next) {
    std::vector<std::vector<double>> rows(20, std::vector<double>(20, 0.0));
    for (std::size_t l = 0; l < 5; ++l)
      for (bool m : {true, false})
        for (bool rhm : {true, false}) rows[index(l, m, rhm)][next(l, m, rhm)] = 1.0;
    mdp.actions.push_back({name, dense_to_matrix(rows), cost, {}});
  };
  action("Stay", 0.0, [&](std::size_t l, bool m, bool rhm) { return index(l, m, rhm); });
  action("Clk", 1.0, [&](std::size_t l, bool m, bool rhm) { return index((l + 1) % 5, m, rhm); });
  action("Cclk", 1.0, [&](std::size_t l, bool m, bool rhm) { return index((l + 4) % 5, m, rhm); });
  action("PUM", 1.0, [&](std::size_t l, bool m, bool rhm) {
    return l == 0 && m ? index(l, false, true) : index(l, m, rhm);
  });
  action("DelM", 1.0, [&](std::size_t l, bool m, bool rhm) {
    return l == 3 && rhm ? index(l, m, false) : index(l, m, rhm);
  });
  mdp.criterion = Discounted{0.9};

  const auto stay = 0, clk = 1, pum = 3, delm = 4;
  Trajectory t;
  t.steps = {{index(0, false, false), stay}, {index(0, true, false), pum},
             {index(0, false, true), clk},   {index(2, false, true), clk},
             {index(3, false, true), delm},  {index(3, false, false), clk}};
  t.final_state = index(4, false, false);
  return {std::move(mdp), std::move(t)};
}

Duplicated duplicated_mdp(Rng& rng, std::size_t n) {
  Duplicated out;
  out.base = random_mdp(rng, n, 2, 0.9);
  // Few reward levels, so refinement has to split on transitions.
  std::uniform_int_distribution<int> level(0, 2);
  for (auto& r : out.base.reward) r = level(rng);
  for (auto& a : out.base.actions) a.cost_overrides.clear();

  auto& d = out.doubled;
  d.criterion = out.base.criterion;
  for (int copy = 0; copy < 2; ++copy)
    for (std::size_t s = 0; s < n; ++s) {
      d.states.push_back(out.base.states[s] + (copy ? "'" : ""));
      d.reward.push_back(out.base.reward[s]);
    }
  for (const auto& a : out.base.actions) {
    const auto rows = matrix_to_dense(a.matrix);
    std::vector<std::vector<double>> big(2 * n, std::vector<double>(2 * n, 0.0));
    for (std::size_t s = 0; s < 2 * n; ++s)
      for (std::size_t j = 0; j < n; ++j) {
        big[s][j] = rows[s % n][j] / 2.0;
        big[s][n + j] = rows[s % n][j] / 2.0;
      }
    d.actions.push_back({a.name, dense_to_matrix(big), a.default_cost, {}});
  }
  return out;
}

}  // namespace dtp::test
