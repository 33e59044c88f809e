#include "dtp/factored.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dtp/error.hpp"

namespace dtp {

std::optional<int> VariableSpec::find_value(std::string_view value) const {
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (domain[i] == value) return static_cast<int>(i);
  return std::nullopt;
}

std::optional<std::size_t> FactoredMdp::find_variable(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> FactoredMdp::find_action(std::string_view name) const {
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (action_name(actions[i]) == name) return i;
  return std::nullopt;
}

std::size_t FactoredMdp::state_count() const {
  std::size_t n = 1;
  for (const auto& v : variables) {
    if (v.size() != 0 && n > std::numeric_limits<std::size_t>::max() / v.size())
      return std::numeric_limits<std::size_t>::max();
    n *= v.size();
  }
  return n;
}

const std::string& action_name(const FactoredAction& a) {
  return std::visit([](const auto& x) -> const std::string& { return x.name; }, a);
}

double action_cost(const FactoredAction& a, const Assignment& s) {
  return std::visit(
      [&](const auto& x) { return x.cost_tree ? x.cost_tree->evaluate(s) : x.cost; }, a);
}

bool is_simple_net(const TwoSliceNet& net) {
  for (const auto& cpt : net.cpts)
    for (const auto& t : tested_variables(cpt))
      if (t.post) return false;
  return true;
}

std::vector<std::size_t> synchronic_order(const TwoSliceNet& net) {
  const auto n = net.cpts.size();
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t x = 0; x < n; ++x)
    for (const auto& t : tested_variables(net.cpts[x]))
      if (t.post) parents[x].push_back(t.var);
  std::vector<bool> placed(n, false);
  std::vector<std::size_t> order;
  while (order.size() < n) {
    bool progress = false;
    for (std::size_t x = 0; x < n; ++x) {
      if (placed[x]) continue;
      bool ready = true;
      for (auto p : parents[x]) ready = ready && p < n && placed[p];
      if (ready) {
        placed[x] = true;
        order.push_back(x);
        progress = true;
        break;
      }
    }
    if (!progress)
      throw Error(ErrorKind::Argument, "synchronic cycle in action " + net.name);
  }
  return order;
}

ValidationReport validate_factored(const FactoredMdp& fmdp) {
  ValidationReport report;
  const auto& vars = fmdp.variables;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].domain.empty())
      report.issues.push_back({"var " + vars[i].name, "empty domain"});
    for (std::size_t j = 0; j < vars[i].domain.size(); ++j)
      for (std::size_t k = j + 1; k < vars[i].domain.size(); ++k)
        if (vars[i].domain[j] == vars[i].domain[k])
          report.issues.push_back({"var " + vars[i].name, "duplicate value " + vars[i].domain[j]});
    for (std::size_t k = i + 1; k < vars.size(); ++k)
      if (vars[i].name == vars[k].name)
        report.issues.push_back({"var " + vars[i].name, "duplicate variable"});
  }

  for (std::size_t c = 0; c < fmdp.reward.size(); ++c)
    check_tree_shape(fmdp.reward[c], vars, false, "reward component " + std::to_string(c), report);

  for (const auto& action : fmdp.actions) {
    const auto& name = action_name(action);
    std::visit([&](const auto& a) {
      if (a.cost_tree) check_tree_shape(*a.cost_tree, vars, false, "cost of " + name, report);
    }, action);
    if (const auto* net = std::get_if<TwoSliceNet>(&action)) {
      if (net->cpts.size() != vars.size()) {
        report.issues.push_back({"action " + name, "missing CPT for some variable"});
        continue;
      }
      for (std::size_t x = 0; x < vars.size(); ++x) {
        const auto where = "action " + name + ", CPT " + vars[x].name;
        check_tree_shape(net->cpts[x], vars, true, where, report);
        for_each_leaf(net->cpts[x], [&](const PathContext&, const Distribution& d) {
          if (d.size() != vars[x].size()) {
            report.issues.push_back({where, "distribution has wrong length"});
            return;
          }
          double sum = 0.0;
          for (double p : d) {
            sum += p;
            if (!(p >= 0.0 && p <= 1.0)) report.issues.push_back({where, "probability outside [0,1]"});
          }
          if (std::abs(sum - 1.0) > kStochasticTol) {
            std::ostringstream os;
            os << "distribution sums to " << sum;
            report.issues.push_back({where, os.str()});
          }
        });
      }
      try {
        (void)synchronic_order(*net);
      } catch (const Error& e) {
        report.issues.push_back({"action " + name, e.what()});
      }
    } else {
      const auto& pso = std::get<ProbStripsOp>(action);
      const auto where = "action " + name;
      check_tree_shape(pso.context, vars, false, where, report);
      for_each_leaf(pso.context, [&](const PathContext&, const EffectList& effects) {
        double sum = 0.0;
        for (const auto& o : effects) {
          sum += o.prob;
          if (!(o.prob >= 0.0 && o.prob <= 1.0)) report.issues.push_back({where, "probability outside [0,1]"});
          for (std::size_t i = 0; i < o.changes.size(); ++i) {
            const auto [var, val] = o.changes[i];
            if (var >= vars.size() || val < 0 || static_cast<std::size_t>(val) >= vars[var].size())
              report.issues.push_back({where, "change set assigns an undeclared variable or value"});
            for (std::size_t j = i + 1; j < o.changes.size(); ++j)
              if (o.changes[j].first == var)
                report.issues.push_back({where, "change set assigns a variable twice"});
          }
        }
        if (std::abs(sum - 1.0) > kStochasticTol) {
          std::ostringstream os;
          os << "effect probabilities sum to " << sum;
          report.issues.push_back({where, os.str()});
        }
      });
    }
  }
  return report;
}

const ScalarTree::Leaf& eval_tree(const ScalarTree& t, const Assignment& s) {
  return t.evaluate(s);
}

double reward_at(const FactoredMdp& fmdp, const Assignment& s) {
  double r = 0.0;
  for (const auto& component : fmdp.reward) r += component.evaluate(s);
  return r;
}

std::vector<std::pair<Assignment, double>> apply_pso(const ProbStripsOp& op,
                                                     const Assignment& s) {
  const auto& effects = op.context.evaluate(s);
  std::vector<std::pair<Assignment, double>> out;
  for (const auto& o : effects) {
    if (o.prob == 0.0) continue;
    Assignment next = s;
    for (const auto& [var, val] : o.changes) next.at(var) = val;
    bool merged = false;
    for (auto& [succ, p] : out)
      if (succ == next) {
        p += o.prob;
        merged = true;
        break;
      }
    if (!merged) out.emplace_back(std::move(next), o.prob);
  }
  return out;
}

std::vector<std::pair<Assignment, double>> apply_net(const TwoSliceNet& net,
                                                     const Assignment& s) {
  const auto order = synchronic_order(net);
  std::vector<std::pair<Assignment, double>> out;
  Assignment post(s.size(), -1);
  auto expand = [&](auto& self, std::size_t k, double p) -> void {
    if (k == order.size()) {
      out.emplace_back(post, p);
      return;
    }
    const auto x = order[k];
    const auto& dist = net.cpts[x].evaluate(s, post);
    for (std::size_t v = 0; v < dist.size(); ++v) {
      if (dist[v] <= 0.0) continue;
      post[x] = static_cast<int>(v);
      self(self, k + 1, p * dist[v]);
    }
    post[x] = -1;
  };
  expand(expand, 0, 1.0);
  return out;
}

std::size_t encode_state(const Assignment& s, const std::vector<VariableSpec>& vars) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < vars.size(); ++i)
    index = index * vars[i].size() + static_cast<std::size_t>(s[i]);
  return index;
}

Assignment decode_state(std::size_t index, const std::vector<VariableSpec>& vars) {
  Assignment s(vars.size());
  for (std::size_t i = vars.size(); i-- > 0;) {
    s[i] = static_cast<int>(index % vars[i].size());
    index /= vars[i].size();
  }
  return s;
}

std::string state_name(const Assignment& s, const std::vector<VariableSpec>& vars) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ',';
    out += vars[i].name;
    out += '=';
    out += vars[i].domain[static_cast<std::size_t>(s[i])];
  }
  return out;
}

Assignment parse_assignment(std::string_view text, const std::vector<VariableSpec>& vars) {
  Assignment out(vars.size(), -1);
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::Argument, "expected VAR=VALUE, got '" + std::string(item) + "'");
    const auto name = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    std::size_t var = vars.size();
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == name) var = i;
    if (var == vars.size())
      throw Error(ErrorKind::Argument, "unknown variable '" + std::string(name) + "'");
    const auto v = vars[var].find_value(value);
    if (!v)
      throw Error(ErrorKind::Argument, "unknown value '" + std::string(value) + "' for " +
                                           std::string(name));
    out[var] = *v;
  }
  return out;
}

FlatMdp ground(const FactoredMdp& fmdp) {
  const auto count = fmdp.state_count();
  if (count > fmdp.grounding_cap)
    throw Error(ErrorKind::Size, "state space of " + std::to_string(count) +
                                     " states exceeds the grounding cap of " +
                                     std::to_string(fmdp.grounding_cap));
  const auto& vars = fmdp.variables;
  FlatMdp flat;
  flat.criterion = fmdp.criterion;
  flat.states.reserve(count);
  flat.reward.reserve(count);
  std::vector<Assignment> assignments;
  assignments.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    assignments.push_back(decode_state(i, vars));
    flat.states.push_back(state_name(assignments.back(), vars));
    flat.reward.push_back(reward_at(fmdp, assignments.back()));
  }

  const auto n = static_cast<Eigen::Index>(count);
  for (const auto& action : fmdp.actions) {
    ActionRecord rec;
    rec.name = action_name(action);
    rec.default_cost = std::visit([](const auto& a) { return a.cost; }, action);
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t i = 0; i < count; ++i) {
      const auto& s = assignments[i];
      const double c = action_cost(action, s);
      if (c != rec.default_cost) rec.cost_overrides[i] = c;
      const auto successors = std::holds_alternative<TwoSliceNet>(action)
                                  ? apply_net(std::get<TwoSliceNet>(action), s)
                                  : apply_pso(std::get<ProbStripsOp>(action), s);
      // Sum duplicates per column so each row holds one entry per successor.
      std::map<std::size_t, double> row;
      for (const auto& [succ, p] : successors) row[encode_state(succ, vars)] += p;
      for (const auto& [j, p] : row)
        entries.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), p);
    }
    rec.matrix = Matrix(n, n);
    rec.matrix.setFromTriplets(entries.begin(), entries.end());
    rec.matrix.makeCompressed();
    flat.actions.push_back(std::move(rec));
  }
  return flat;
}

}  // namespace dtp
