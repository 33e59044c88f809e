// Command-line front end for the dtp planning toolkit.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include "dtp/abstraction.hpp"
#include "dtp/chain.hpp"
#include "dtp/events.hpp"
#include "dtp/factored.hpp"
#include "dtp/io.hpp"
#include "dtp/minimization.hpp"
#include "dtp/search.hpp"
#include "dtp/solvers.hpp"
#include "dtp/structured_vi.hpp"

namespace {

enum Exit { kOk = 0, kDiagnostics = 1, kNoSolution = 2, kInternal = 3 };

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path);
  if (!in) throw dtp::Error(dtp::ErrorKind::Argument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Loaded {
  std::optional<dtp::FactoredMdp> factored;
  dtp::FlatDocument flat;
};

Loaded load(const std::string& path, bool need_flat = true) {
  const auto text = read_input(path);
  Loaded out;
  if (dtp::looks_factored(text)) {
    out.factored = dtp::parse_factored(text);
    if (need_flat) out.flat.mdp = dtp::ground(*out.factored);
  } else {
    out.flat = dtp::parse_flat_document(text);
  }
  return out;
}

dtp::FactoredMdp load_factored(const std::string& path) {
  const auto text = read_input(path);
  if (!dtp::looks_factored(text))
    throw dtp::Error(dtp::ErrorKind::Argument, path + " is not a factored model");
  return dtp::parse_factored(text);
}

// Accepts a state name, or a full VAR=val assignment for factored input.
std::size_t resolve_state(const Loaded& m, const std::string& text) {
  if (auto s = m.flat.mdp.find_state(text)) return *s;
  if (m.factored) {
    const auto a = dtp::parse_assignment(text, m.factored->variables);
    for (int v : a)
      if (v < 0) throw dtp::Error(dtp::ErrorKind::Argument, "state '" + text + "' is not a full assignment");
    return dtp::encode_state(a, m.factored->variables);
  }
  return m.flat.mdp.state_index(text);
}

double discount_of(const dtp::FlatMdp& mdp, std::optional<double> override) {
  if (override) return *override;
  if (const auto* d = std::get_if<dtp::Discounted>(&mdp.criterion)) return d->gamma;
  throw dtp::Error(dtp::ErrorKind::Criterion, "model is finite-horizon; pass --discount");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-theoretic planning toolkit"};
  app.require_subcommand(1);

  std::string model;
  std::string method = "auto";
  std::optional<int> horizon;
  std::optional<double> discount;
  double eps = 1e-6;
  std::size_t m = 5;
  std::string policy_path;
  bool exact = false;
  std::optional<std::size_t> iters;
  std::string start;
  std::size_t steps = 10;
  std::uint64_t seed = 0;
  double chain_eps = 0.0;
  bool explicit_order = false;
  std::optional<std::size_t> prune_leaves;
  std::optional<double> prune_span;
  std::string seed_vars;
  double tol = 1e-9;
  bool emit_quotient = false;
  std::string init_text, goal_text;
  std::size_t depth = 8;
  bool restrict = false;
  std::optional<std::size_t> execute;
  std::string policy_out;

  auto add_model = [&](CLI::App* sub) { sub->add_option("model", model, "Model file, or - for stdin")->required(); };

  auto* validate = app.add_subcommand("validate", "Check a flat or factored model");
  add_model(validate);

  auto* solve = app.add_subcommand("solve", "Solve by dynamic programming");
  add_model(solve);
  solve->add_option("--method", method, "vi | vi-finite | pi | mpi")
      ->check(CLI::IsMember({"auto", "vi", "vi-finite", "pi", "mpi"}));
  auto* h_opt = solve->add_option("--horizon", horizon, "Stages for vi-finite");
  solve->add_option("--discount", discount, "Discount factor")->excludes(h_opt);
  solve->add_option("--eps", eps, "Optimality tolerance");
  solve->add_option("--m", m, "Backups per evaluation in mpi");
  solve->add_option("--policy-out", policy_out, "Also write the policy to this file");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a stationary policy");
  add_model(evaluate);
  evaluate->add_option("--policy", policy_path, "Policy file of 'state : action' lines")->required();
  auto* exact_opt = evaluate->add_flag("--exact", exact, "Solve the linear system");
  evaluate->add_option("--iters", iters, "Successive-approximation backups")->excludes(exact_opt);
  evaluate->add_option("--discount", discount, "Discount factor");

  auto* simulate = app.add_subcommand("simulate", "Sample a trajectory under a policy");
  add_model(simulate);
  simulate->add_option("--policy", policy_path)->required();
  simulate->add_option("--start", start)->required();
  simulate->add_option("--steps", steps);
  simulate->add_option("--seed", seed);

  auto* classify = app.add_subcommand("classify", "Recurrent, transient and absorbing states of a policy chain");
  add_model(classify);
  classify->add_option("--policy", policy_path)->required();
  classify->add_option("--eps", chain_eps, "Entries at or below this count as zero");

  auto* compose = app.add_subcommand("compose-events", "Fold the document's events into every action");
  add_model(compose);
  compose->add_flag("--explicit-order", explicit_order, "Accept the listed order for non-commuting events");

  auto* groundc = app.add_subcommand("ground", "Enumerate a factored model as a flat one");
  add_model(groundc);

  auto* svi = app.add_subcommand("svi", "Structured value iteration over decision trees");
  add_model(svi);
  auto* sh_opt = svi->add_option("--horizon", horizon);
  svi->add_option("--discount", discount)->excludes(sh_opt);
  svi->add_option("--eps", eps);
  auto* pl = svi->add_option("--prune-leaves", prune_leaves);
  svi->add_option("--prune-span", prune_span)->excludes(pl);

  auto* abstractc = app.add_subcommand("abstract", "Project onto the relevance closure of some variables");
  add_model(abstractc);
  abstractc->add_option("--seed-vars", seed_vars, "Comma-separated; defaults to the reward variables");

  auto* minimize = app.add_subcommand("minimize", "Coarsest stable partition of the flat model");
  add_model(minimize);
  minimize->add_option("--tol", tol);
  minimize->add_flag("--quotient", emit_quotient, "Print the aggregate model instead");

  auto* regress = app.add_subcommand("regress", "Goal regression over deterministic operators");
  add_model(regress);
  regress->add_option("--init", init_text, "Full assignment VAR=val,...")->required();
  regress->add_option("--goal", goal_text, "Partial assignment VAR=val,...")->required();
  regress->add_option("--depth", depth);

  auto* reach = app.add_subcommand("reach", "States reachable from a start state");
  add_model(reach);
  reach->add_option("--start", start)->required();
  reach->add_flag("--restrict", restrict, "Print the restricted model");

  auto* search = app.add_subcommand("search", "Depth-limited expectimax");
  add_model(search);
  search->add_option("--start", start)->required();
  search->add_option("--depth", depth);
  search->add_option("--execute", execute, "Interleave search and execution for n steps");
  search->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kDiagnostics;
  }

  try {
    std::ostream& out = std::cout;
    if (validate->parsed()) {
      const auto text = read_input(model);
      if (dtp::looks_factored(text)) {
        const auto f = dtp::parse_factored(text);
        out << "ok: factored, " << f.variables.size() << " variables, " << f.actions.size()
            << " actions, " << f.state_count() << " states\n";
      } else {
        const auto d = dtp::parse_flat_document(text);
        out << "ok: flat, " << d.mdp.num_states() << " states, " << d.mdp.num_actions()
            << " actions, " << d.events.size() << " events\n";
      }
    } else if (solve->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      if (method == "auto")
        method = horizon || std::holds_alternative<dtp::FiniteHorizon>(mdp.criterion) ? "vi-finite" : "vi";
      std::optional<dtp::StationaryPolicy> policy;
      if (method == "vi-finite") {
        int t = horizon.value_or(0);
        if (!horizon) {
          const auto* f = std::get_if<dtp::FiniteHorizon>(&mdp.criterion);
          if (!f) throw dtp::Error(dtp::ErrorKind::Criterion, "model is discounted; pass --horizon");
          t = f->steps;
        }
        out << dtp::emit_finite_solution(mdp, dtp::vi_finite(mdp, t));
      } else {
        const double g = discount_of(mdp, discount);
        dtp::StationarySolution sol;
        if (method == "vi")
          sol = dtp::vi_discounted(mdp, g, eps);
        else if (method == "pi")
          sol = dtp::policy_iteration(mdp, g, dtp::StationaryPolicy{std::vector<std::size_t>(mdp.num_states(), 0)});
        else
          sol = dtp::modified_policy_iteration(mdp, g, m, eps);
        out << "values\n" << dtp::emit_values(mdp, sol.values) << "policy\n"
            << dtp::emit_policy(mdp, sol.policy);
        policy = sol.policy;
      }
      if (!policy_out.empty()) {
        if (!policy) throw dtp::Error(dtp::ErrorKind::Argument, "--policy-out needs a stationary method");
        std::ofstream(policy_out) << dtp::emit_policy(mdp, *policy);
      }
    } else if (evaluate->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto policy = dtp::parse_policy(read_input(policy_path), mdp);
      const double g = discount_of(mdp, discount);
      const auto v = iters ? dtp::evaluate_policy_iterative(mdp, policy, g, dtp::IterationCount{*iters})
                           : dtp::evaluate_policy_exact(mdp, policy, g);
      out << dtp::emit_values(mdp, v);
    } else if (simulate->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto policy = dtp::parse_policy(read_input(policy_path), mdp);
      out << dtp::emit_trajectory(mdp, dtp::simulate_policy(mdp, policy, resolve_state(loaded, start), steps, seed));
    } else if (classify->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto policy = dtp::parse_policy(read_input(policy_path), mdp);
      out << dtp::emit_chain_structure(mdp, dtp::classify_chain(dtp::induce_chain(mdp, policy), chain_eps));
    } else if (compose->parsed()) {
      auto loaded = load(model);
      auto& doc = loaded.flat;
      dtp::CompileOptions opts;
      opts.explicit_order = explicit_order;
      for (auto& a : doc.mdp.actions) a = dtp::compile_implicit_action(a, doc.events, opts);
      out << dtp::emit_flat(doc.mdp);
    } else if (groundc->parsed()) {
      out << dtp::emit_flat(dtp::ground(load_factored(model)));
    } else if (svi->parsed()) {
      const auto f = load_factored(model);
      dtp::SviStop stop = dtp::DiscountedStop{0.9, eps};
      if (horizon)
        stop = dtp::FiniteHorizon{*horizon};
      else if (discount)
        stop = dtp::DiscountedStop{*discount, eps};
      else if (const auto* fh = std::get_if<dtp::FiniteHorizon>(&f.criterion))
        stop = *fh;
      else
        stop = dtp::DiscountedStop{std::get<dtp::Discounted>(f.criterion).gamma, eps};
      const auto r = dtp::structured_value_iteration(f, stop);
      out << "iterations " << r.iterations << "\n";
      out << "value\n" << dtp::emit_value_tree(r.value, f.variables);
      out << "policy\n" << dtp::emit_policy_tree(r.policy, f);
      if (prune_leaves || prune_span) {
        const auto p = prune_leaves ? dtp::prune_value_tree(r.value, dtp::MaxLeaves{*prune_leaves})
                                    : dtp::prune_value_tree(r.value, dtp::MaxSpan{*prune_span});
        out << "pruned (max span " << dtp::format_real(p.max_span) << ")\n"
            << dtp::emit_interval_tree(p.tree, f.variables);
      }
    } else if (abstractc->parsed()) {
      const auto f = load_factored(model);
      dtp::VariableSet seeds;
      if (seed_vars.empty()) {
        seeds = dtp::reward_variables(f);
      } else {
        std::stringstream ss(seed_vars);
        std::string name;
        while (std::getline(ss, name, ',')) {
          auto v = f.find_variable(name);
          if (!v) throw dtp::Error(dtp::ErrorKind::Argument, "unknown variable '" + name + "'");
          seeds.insert(*v);
        }
      }
      const auto keep = dtp::relevant_closure(f, seeds);
      const auto projected = dtp::project_abstract(f, keep);
      out << "; relevant:";
      for (auto v : keep) out << " " << f.variables[v].name;
      out << "\n; states: " << f.state_count() << " -> " << projected.state_count() << "\n";
      out << dtp::emit_factored(projected);
    } else if (minimize->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto p = dtp::refine_partition(mdp, dtp::initial_reward_partition(mdp, tol), tol);
      if (emit_quotient)
        out << dtp::emit_flat(dtp::quotient(mdp, p, tol));
      else
        out << dtp::emit_partition(mdp, p);
    } else if (regress->parsed()) {
      const auto f = load_factored(model);
      const auto ops = dtp::strips_from_factored(f);
      const auto init = dtp::parse_assignment(init_text, f.variables);
      for (int v : init)
        if (v < 0) throw dtp::Error(dtp::ErrorKind::Argument, "--init must assign every variable");
      const auto goal = dtp::parse_subgoals(goal_text, f.variables);
      const auto plan = dtp::regression_plan(ops, init, goal, depth);
      if (!plan) {
        out << "no plan within depth " << depth << "\n";
        return kNoSolution;
      }
      for (std::size_t i = 0; i < plan->subgoals.size(); ++i)
        out << "SG" << i << " : {" << dtp::subgoal_text(plan->subgoals[i], f.variables) << "}\n";
      out << "plan :";
      for (auto i : plan->ops) out << " " << ops[i].name;
      out << "\n";
    } else if (reach->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto set = dtp::reachable_set(mdp, {resolve_state(loaded, start)});
      if (restrict) {
        out << dtp::emit_flat(dtp::restrict_mdp(mdp, set));
      } else {
        for (auto s : set) out << mdp.states[s] << "\n";
      }
    } else if (search->parsed()) {
      const auto loaded = load(model);
      const auto& mdp = loaded.flat.mdp;
      const auto s = resolve_state(loaded, start);
      if (execute) {
        out << dtp::emit_trajectory(mdp, dtp::plan_execute_loop(mdp, s, depth, *execute, seed));
      } else {
        const auto r = dtp::expectimax(mdp, s, depth);
        out << "value " << dtp::format_real(r.value) << "\n";
        out << "action " << (r.action ? mdp.actions[*r.action].name : std::string("none")) << "\n";
        out << "nodes " << r.nodes << "\n";
      }
    }
  } catch (const dtp::ParseError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << "error: " << d.str() << "\n";
    return kDiagnostics;
  } catch (const dtp::Error& e) {
    std::cerr << "error (" << dtp::to_string(e.kind()) << "): " << e.what() << "\n";
    return kDiagnostics;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
