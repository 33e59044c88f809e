#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "dtp/io.hpp"
#include "sexpr.hpp"

namespace dtp {
namespace {

using detail::SExpr;

// Aborts the current element after its diagnostic has been recorded.
struct Bail {};

class FactoredParser {
 public:
  explicit FactoredParser(std::string_view text) : text_(text) {}

  FactoredMdp run() {
    std::vector<SExpr> top;
    top = detail::read_sexprs(text_);
    if (top.size() != 1 || !top[0].headed("fmdp")) {
      const auto& at = top.empty() ? SExpr{} : top[0];
      throw ParseError({{at.line, at.column, "expected a single (fmdp ...) form"}});
    }
    const auto& root = top[0];
    // Variables first so that trees may refer to any of them.
    for (std::size_t i = 1; i < root.items.size(); ++i)
      if (root.items[i].headed("var")) guard([&] { variable(root.items[i]); });
    for (std::size_t i = 1; i < root.items.size(); ++i) {
      const auto& item = root.items[i];
      guard([&] {
        if (item.headed("var")) return;
        if (item.headed("reward")) return reward(item);
        if (item.headed("action")) return action(item);
        if (item.headed("discount")) return discount(item);
        if (item.headed("horizon")) return horizon(item);
        if (item.headed("cap")) return cap(item);
        fail(item, "unexpected form in fmdp");
      });
    }
    if (fmdp_.actions.empty()) diags_.push_back({root.line, root.column, "no actions declared"});
    if (diags_.empty()) {
      for (const auto& issue : validate_factored(fmdp_).issues) {
        auto where = locations_.find(issue.location.substr(0, issue.location.find(',')));
        const auto& at = where == locations_.end() ? root : *where->second;
        diags_.push_back({at.line, at.column, issue.message + " (" + issue.location + ")"});
      }
    }
    if (!diags_.empty()) throw ParseError(std::move(diags_));
    return std::move(fmdp_);
  }

 private:
  template <class F>
  void guard(F&& f) {
    try {
      f();
    } catch (const Bail&) {
    }
  }

  [[noreturn]] void fail(const SExpr& at, std::string message) {
    diags_.push_back({at.line, at.column, std::move(message)});
    throw Bail{};
  }

  const std::string& atom(const SExpr& e, const char* what) {
    if (e.is_list) fail(e, std::string("expected ") + what);
    return e.atom;
  }

  double real(const SExpr& e) {
    const auto& s = atom(e, "a number");
    std::string_view v = s;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
      fail(e, "expected a number, got '" + s + "'");
    return out;
  }

  long integer(const SExpr& e) {
    const auto& s = atom(e, "an integer");
    long out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || p != s.data() + s.size()) fail(e, "expected an integer, got '" + s + "'");
    return out;
  }

  std::size_t var_index(const SExpr& e) {
    const auto& name = atom(e, "a variable name");
    auto v = fmdp_.find_variable(name);
    if (!v) fail(e, "undeclared variable '" + name + "'");
    return *v;
  }

  int value_index(std::size_t var, const SExpr& e) {
    const auto& name = atom(e, "a value");
    auto v = fmdp_.variables[var].find_value(name);
    if (!v) fail(e, "variable " + fmdp_.variables[var].name + " has no value '" + name + "'");
    return *v;
  }

  void variable(const SExpr& e) {
    if (e.items.size() != 3 || !e.items[2].is_list) fail(e, "expected (var <id> (<val>+))");
    VariableSpec v;
    v.name = atom(e.items[1], "a variable name");
    if (fmdp_.find_variable(v.name)) fail(e.items[1], "duplicate variable '" + v.name + "'");
    if (v.name.find('\'') != std::string::npos || v.name == "else")
      fail(e.items[1], "invalid variable name '" + v.name + "'");
    for (const auto& val : e.items[2].items) {
      const auto& name = atom(val, "a value");
      if (v.find_value(name)) fail(val, "duplicate value '" + name + "'");
      v.domain.push_back(name);
    }
    if (v.domain.empty()) fail(e.items[2], "variable " + v.name + " has an empty domain");
    fmdp_.variables.push_back(std::move(v));
  }

  template <class L, class Leaf>
  DecisionTree<L> tree(const SExpr& e, Leaf&& leaf) {
    if (!e.headed("tree")) return DecisionTree<L>::leaf(leaf(e));
    if (e.items.size() < 3) fail(e, "tree node needs a variable and branches");
    std::string name = atom(e.items[1], "a variable name");
    VarTest test;
    if (!name.empty() && name.back() == '\'') {
      test.post = true;
      name.pop_back();
    }
    auto v = fmdp_.find_variable(name);
    if (!v) fail(e.items[1], "undeclared variable '" + name + "'");
    test.var = *v;
    const auto& domain = fmdp_.variables[*v].domain;
    std::vector<std::optional<DecisionTree<L>>> kids(domain.size());
    std::optional<DecisionTree<L>> otherwise;
    for (std::size_t i = 2; i < e.items.size(); ++i) {
      const auto& br = e.items[i];
      if (!br.is_list || br.items.size() != 2) fail(br, "expected (<value> <subtree>)");
      auto sub = tree<L>(br.items[1], leaf);
      if (br.items[0].is_atom("else")) {
        if (otherwise) fail(br, "duplicate else branch");
        otherwise = std::move(sub);
        continue;
      }
      const auto val = static_cast<std::size_t>(value_index(*v, br.items[0]));
      if (kids[val]) fail(br.items[0], "duplicate branch for value '" + domain[val] + "'");
      kids[val] = std::move(sub);
    }
    std::vector<DecisionTree<L>> children;
    for (std::size_t val = 0; val < kids.size(); ++val) {
      if (kids[val])
        children.push_back(*kids[val]);
      else if (otherwise)
        children.push_back(*otherwise);
      else
        fail(e, "node testing " + name + " has no branch for value '" + domain[val] + "' and no else");
    }
    return DecisionTree<L>::node(test, std::move(children));
  }

  ScalarTree scalar_tree(const SExpr& e) {
    return tree<double>(e, [&](const SExpr& x) { return real(x); });
  }

  void reward(const SExpr& e) {
    if (e.items.size() != 2) fail(e, "expected (reward <tree>) or (reward (add <tree>+))");
    const auto& body = e.items[1];
    if (body.headed("add")) {
      for (std::size_t i = 1; i < body.items.size(); ++i) fmdp_.reward.push_back(scalar_tree(body.items[i]));
    } else {
      fmdp_.reward.push_back(scalar_tree(body));
    }
  }

  void discount(const SExpr& e) {
    if (e.items.size() != 2) fail(e, "expected (discount <real>)");
    const double g = real(e.items[1]);
    if (!(g >= 0.0 && g < 1.0)) fail(e.items[1], "discount must lie in [0, 1)");
    fmdp_.criterion = Discounted{g};
  }

  void horizon(const SExpr& e) {
    if (e.items.size() != 2) fail(e, "expected (horizon <int>)");
    const long t = integer(e.items[1]);
    if (t < 1) fail(e.items[1], "horizon must be positive");
    fmdp_.criterion = FiniteHorizon{static_cast<int>(t)};
  }

  void cap(const SExpr& e) {
    if (e.items.size() != 2) fail(e, "expected (cap <int>)");
    const long c = integer(e.items[1]);
    if (c < 1) fail(e.items[1], "grounding cap must be positive");
    fmdp_.grounding_cap = static_cast<std::size_t>(c);
  }

  Distribution dist(std::size_t var, const SExpr& e) {
    if (!e.headed("dist")) fail(e, "expected a (dist ...) leaf");
    Distribution d(fmdp_.variables[var].size(), 0.0);
    std::vector<bool> seen(d.size(), false);
    double sum = 0.0;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const auto& entry = e.items[i];
      if (!entry.is_list || entry.items.size() != 2) fail(entry, "expected (<value> <probability>)");
      const auto val = static_cast<std::size_t>(value_index(var, entry.items[0]));
      if (seen[val]) fail(entry.items[0], "duplicate value in distribution");
      seen[val] = true;
      d[val] = real(entry.items[1]);
      if (!(d[val] >= 0.0 && d[val] <= 1.0)) fail(entry.items[1], "probability outside [0,1]");
      sum += d[val];
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "distribution for " << fmdp_.variables[var].name << " sums to " << sum << " ≠ 1";
      fail(e, os.str());
    }
    return d;
  }

  EffectList effects(const SExpr& e) {
    if (!e.headed("effects")) fail(e, "expected an (effects ...) leaf");
    EffectList out;
    double sum = 0.0;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const auto& o = e.items[i];
      if (!o.is_list || o.items.empty()) fail(o, "expected ((<var> <val>)* <probability>)");
      Outcome outcome;
      for (std::size_t k = 0; k + 1 < o.items.size(); ++k) {
        const auto& ch = o.items[k];
        if (!ch.is_list || ch.items.size() != 2) fail(ch, "expected (<var> <val>)");
        const auto var = var_index(ch.items[0]);
        for (const auto& [prev, val] : outcome.changes)
          if (prev == var) fail(ch, "change set assigns " + fmdp_.variables[var].name + " twice");
        outcome.changes.emplace_back(var, value_index(var, ch.items[1]));
      }
      outcome.prob = real(o.items.back());
      if (!(outcome.prob >= 0.0 && outcome.prob <= 1.0)) fail(o.items.back(), "probability outside [0,1]");
      sum += outcome.prob;
      out.push_back(std::move(outcome));
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "effect probabilities sum to " << sum << " ≠ 1";
      fail(e, os.str());
    }
    return out;
  }

  void action(const SExpr& e) {
    if (e.items.size() < 2) fail(e, "expected (action <id> ...)");
    const auto name = atom(e.items[1], "an action name");
    if (fmdp_.find_action(name)) fail(e.items[1], "duplicate action '" + name + "'");
    double cost = 0.0;
    std::optional<ScalarTree> cost_tree;
    std::vector<std::optional<DistTree>> cpts(fmdp_.variables.size());
    std::optional<EffectTree> pso;
    bool any_cpt = false;
    for (std::size_t i = 2; i < e.items.size(); ++i) {
      const auto& part = e.items[i];
      if (part.headed("cost")) {
        if (part.items.size() != 2) fail(part, "expected (cost <real|tree>)");
        if (part.items[1].is_list)
          cost_tree = scalar_tree(part.items[1]);
        else
          cost = real(part.items[1]);
      } else if (part.headed("cpt")) {
        if (part.items.size() != 3) fail(part, "expected (cpt <var> <tree>)");
        const auto var = var_index(part.items[1]);
        if (cpts[var]) fail(part.items[1], "duplicate CPT for variable " + fmdp_.variables[var].name);
        cpts[var] = tree<Distribution>(part.items[2], [&](const SExpr& x) { return dist(var, x); });
        any_cpt = true;
      } else if (part.headed("pso")) {
        if (part.items.size() != 2) fail(part, "expected (pso <tree>)");
        if (pso) fail(part, "duplicate pso body");
        pso = tree<EffectList>(part.items[1], [&](const SExpr& x) { return effects(x); });
      } else {
        fail(part, "expected (cost ...), (cpt ...) or (pso ...)");
      }
    }
    locations_["action " + name] = &e;
    if (pso && any_cpt) fail(e, "action " + name + " mixes cpt and pso forms");
    if (pso) {
      fmdp_.actions.emplace_back(ProbStripsOp{name, cost, cost_tree, *pso});
      return;
    }
    TwoSliceNet net{name, cost, cost_tree, {}};
    for (std::size_t v = 0; v < cpts.size(); ++v) {
      if (!cpts[v]) fail(e, "missing CPT for variable " + fmdp_.variables[v].name + " in action " + name);
      net.cpts.push_back(*cpts[v]);
    }
    fmdp_.actions.emplace_back(std::move(net));
  }

  std::string_view text_;
  FactoredMdp fmdp_;
  std::vector<Diagnostic> diags_;
  std::map<std::string, const SExpr*> locations_;
};

}  // namespace

FactoredMdp parse_factored(std::string_view text) { return FactoredParser(text).run(); }

}  // namespace dtp
