#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "dtp/io.hpp"

namespace dtp {

std::string Diagnostic::str() const {
  return message + " at line " + std::to_string(line) + ", column " + std::to_string(column);
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += '\n';
    out += d.str();
  }
  return out;
}

std::string state_list(const FlatMdp& mdp, const StateSet& set) {
  std::string out = "{";
  bool first = true;
  for (auto s : set) {
    if (!first) out += ' ';
    out += mdp.states[s];
    first = false;
  }
  return out + "}";
}

template <class L, class F>
void print_tree(std::string& out, const DecisionTree<L>& t, const std::vector<VariableSpec>& vars,
                std::size_t indent, F&& leaf, bool compress_else) {
  if (t.is_leaf()) {
    out += leaf(t.payload());
    return;
  }
  const auto test = t.test();
  const auto& var = vars.at(test.var);
  out += "(tree " + var.name + (test.post ? "'" : "");
  const auto& kids = t.children();

  // The most repeated branch becomes the else branch on wide domains.
  std::size_t else_branch = kids.size();
  if (compress_else && kids.size() >= 3) {
    std::size_t best_count = 1;
    for (std::size_t v = 0; v < kids.size(); ++v) {
      std::size_t count = 0;
      for (const auto& k : kids) count += k == kids[v];
      if (count > best_count) {
        best_count = count;
        else_branch = v;
      }
    }
  }
  const std::string pad(indent + 2, ' ');
  for (std::size_t v = 0; v < kids.size(); ++v) {
    if (else_branch < kids.size() && kids[v] == kids[else_branch]) continue;
    out += "\n" + pad + "(" + var.domain.at(v) + " ";
    print_tree(out, kids[v], vars, indent + 2, leaf, compress_else);
    out += ")";
  }
  if (else_branch < kids.size()) {
    out += "\n" + pad + "(else ";
    print_tree(out, kids[else_branch], vars, indent + 2, leaf, compress_else);
    out += ")";
  }
  out += ")";
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorKind::Parse, join_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  std::string s(buf, end);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string format_real_exact(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string emit_flat(const FlatMdp& mdp, const std::vector<ExogenousEvent>& events) {
  std::string out = "states";
  for (const auto& s : mdp.states) out += " " + s;
  out += "\n";
  if (const auto* h = std::get_if<FiniteHorizon>(&mdp.criterion))
    out += "horizon " + std::to_string(h->steps) + "\n";
  else
    out += "discount " + format_real_exact(std::get<Discounted>(mdp.criterion).gamma) + "\n";
  if (mdp.initial) {
    out += "init";
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
      if ((*mdp.initial)[s] != 0.0) out += " " + mdp.states[s] + " " + format_real_exact((*mdp.initial)[s]);
    out += "\n";
  }
  auto rows = [&](const Matrix& m) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      out += mdp.states[s] + " :";
      for (Matrix::InnerIterator it(m, static_cast<Eigen::Index>(s)); it; ++it)
        out += " " + mdp.states[it.col()] + " " + format_real_exact(it.value());
      out += "\n";
    }
  };
  for (const auto& a : mdp.actions) {
    out += "\naction " + a.name + " cost " + format_real_exact(a.default_cost) + "\n";
    rows(a.matrix);
    for (const auto& [s, c] : a.cost_overrides)
      out += "costrow " + mdp.states[s] + " " + format_real_exact(c) + "\n";
  }
  for (const auto& e : events) {
    out += "\nevent " + e.name + "\n";
    rows(e.matrix);
    for (std::size_t s = 0; s < e.occurrence.size(); ++s)
      out += "occur " + mdp.states[s] + " " + format_real_exact(e.occurrence[s]) + "\n";
  }
  out += "\nreward\n";
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    out += mdp.states[s] + " : " + format_real_exact(mdp.reward[s]) + "\n";
  return out;
}

namespace {

std::string dist_text(const Distribution& d, const VariableSpec& var) {
  std::string out = "(dist";
  for (std::size_t v = 0; v < d.size(); ++v)
    out += " (" + var.domain.at(v) + " " + format_real_exact(d[v]) + ")";
  return out + ")";
}

std::string effects_text(const EffectList& effects, const std::vector<VariableSpec>& vars) {
  std::string out = "(effects";
  for (const auto& o : effects) {
    out += " (";
    for (const auto& [var, val] : o.changes)
      out += "(" + vars.at(var).name + " " + vars.at(var).domain.at(static_cast<std::size_t>(val)) + ") ";
    out += format_real_exact(o.prob) + ")";
  }
  return out + ")";
}

}  // namespace

std::string emit_factored(const FactoredMdp& fmdp) {
  const auto& vars = fmdp.variables;
  std::string out = "(fmdp";
  for (const auto& v : vars) {
    out += "\n  (var " + v.name + " (";
    for (std::size_t i = 0; i < v.domain.size(); ++i) out += (i ? " " : "") + v.domain[i];
    out += "))";
  }
  const auto scalar = [](double x) { return format_real_exact(x); };
  out += "\n  (reward (add";
  for (const auto& c : fmdp.reward) {
    out += "\n    ";
    print_tree(out, c, vars, 4, scalar, true);
  }
  out += "))";
  for (const auto& action : fmdp.actions) {
    std::visit([&](const auto& a) {
      out += "\n  (action " + a.name;
      if (a.cost_tree) {
        out += "\n    (cost ";
        print_tree(out, *a.cost_tree, vars, 4, scalar, true);
        out += ")";
      } else {
        out += " (cost " + format_real_exact(a.cost) + ")";
      }
    }, action);
    if (const auto* net = std::get_if<TwoSliceNet>(&action)) {
      for (std::size_t x = 0; x < net->cpts.size(); ++x) {
        out += "\n    (cpt " + vars.at(x).name + " ";
        print_tree(out, net->cpts[x], vars, 4,
                   [&](const Distribution& d) { return dist_text(d, vars.at(x)); }, true);
        out += ")";
      }
    } else {
      out += "\n    (pso ";
      print_tree(out, std::get<ProbStripsOp>(action).context, vars, 4,
                 [&](const EffectList& e) { return effects_text(e, vars); }, true);
      out += ")";
    }
    out += ")";
  }
  if (const auto* h = std::get_if<FiniteHorizon>(&fmdp.criterion))
    out += "\n  (horizon " + std::to_string(h->steps) + ")";
  else
    out += "\n  (discount " + format_real_exact(std::get<Discounted>(fmdp.criterion).gamma) + ")";
  if (fmdp.grounding_cap != kDefaultGroundingCap)
    out += "\n  (cap " + std::to_string(fmdp.grounding_cap) + ")";
  return out + ")\n";
}

std::string emit_values(const FlatMdp& mdp, const ValueFunction& v) {
  std::string out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    out += mdp.states[s] + " : " + format_real(v.at(s)) + "\n";
  return out;
}

std::string emit_policy(const FlatMdp& mdp, const StationaryPolicy& p) {
  std::string out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    out += mdp.states[s] + " : " + mdp.actions.at(p.action.at(s)).name + "\n";
  return out;
}

std::string emit_finite_solution(const FlatMdp& mdp, const FiniteSolution& sol) {
  std::string out;
  for (std::size_t t = 0; t < sol.values.size(); ++t) {
    out += "stage " + std::to_string(t) + "\n";
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      out += mdp.states[s] + " : " + format_real(sol.values[t][s]);
      if (t > 0) out += " " + mdp.actions.at(sol.policy.action[t][s]).name;
      out += "\n";
    }
  }
  return out;
}

std::string emit_chain_structure(const FlatMdp& mdp, const ChainStructure& cs) {
  std::string out;
  for (const auto& c : cs.recurrent_classes) out += "recurrent " + state_list(mdp, c) + "\n";
  out += "transient " + state_list(mdp, cs.transient) + "\n";
  out += "absorbing " + state_list(mdp, cs.absorbing) + "\n";
  return out;
}

std::string emit_trajectory(const FlatMdp& mdp, const Trajectory& t) {
  std::string out;
  for (std::size_t k = 0; k < t.steps.size(); ++k)
    out += std::to_string(k) + " " + mdp.states[t.steps[k].state] + " " +
           mdp.actions[t.steps[k].action].name + "\n";
  out += "final " + mdp.states[t.final_state] + "\n";
  return out;
}

std::string emit_partition(const FlatMdp& mdp, const Partition& p) {
  std::string out;
  for (std::size_t b = 0; b < p.size(); ++b) {
    out += "B" + std::to_string(b) + " :";
    for (auto s : p.blocks[b]) out += " " + mdp.states[s];
    out += "\n";
  }
  return out;
}

std::string emit_value_tree(const ValueTree& t, const std::vector<VariableSpec>& vars) {
  std::string out;
  print_tree(out, t, vars, 0, [](double v) { return format_real(v); }, false);
  return out + "\n";
}

std::string emit_interval_tree(const IntervalTree& t, const std::vector<VariableSpec>& vars) {
  std::string out;
  print_tree(out, t, vars, 0,
             [](const Interval& i) { return "[" + format_real(i.lo) + ", " + format_real(i.hi) + "]"; },
             false);
  return out + "\n";
}

std::string emit_policy_tree(const PolicyTree& t, const FactoredMdp& fmdp) {
  std::string out;
  print_tree(out, t, fmdp.variables, 0,
             [&](std::size_t a) { return action_name(fmdp.actions.at(a)); }, false);
  return out + "\n";
}

StationaryPolicy parse_policy(std::string_view text, const FlatMdp& mdp) {
  StationaryPolicy p;
  p.action.assign(mdp.num_states(), mdp.num_actions());
  std::vector<Diagnostic> diags;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string state, colon, action;
    if (!(ls >> state)) continue;
    if (!(ls >> colon >> action) || colon != ":") {
      diags.push_back({lineno, 1, "expected 'state : action'"});
      continue;
    }
    const auto s = mdp.find_state(state);
    const auto a = mdp.find_action(action);
    if (!s) diags.push_back({lineno, line.find(state) + 1, "unknown state '" + state + "'"});
    if (!a) diags.push_back({lineno, line.rfind(action) + 1, "unknown action '" + action + "'"});
    if (s && a) p.action[*s] = *a;
  }
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    if (p.action[s] == mdp.num_actions())
      diags.push_back({lineno + 1, 1, "policy gives no action for state " + mdp.states[s]});
  if (!diags.empty()) throw ParseError(std::move(diags));
  return p;
}

}  // namespace dtp
