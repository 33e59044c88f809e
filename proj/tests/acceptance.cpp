// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dtp/abstraction.hpp"
#include "dtp/chain.hpp"
#include "dtp/events.hpp"
#include "dtp/factored.hpp"
#include "dtp/io.hpp"
#include "dtp/minimization.hpp"
#include "dtp/search.hpp"
#include "dtp/solvers.hpp"
#include "dtp/structured_vi.hpp"
#include "support.hpp"

using namespace dtp;
using namespace dtp::test;

namespace {

// Collects the first few failures of a criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(12);
    os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
    expect(std::abs(got - want) <= tol, os.str());
  }
  std::size_t failed = 0;
};

FactoredMdp load_factored_file(const std::string& name) {
  return parse_factored(read_file(data_path(name)));
}

void value_table(Check& c) {
  const auto f = load_factored_file("robot16.fmdp");
  const auto mdp = ground(f);
  const auto sol = vi_finite(mdp, 2);
  const auto all = mdp.num_actions();
  for (const auto& row : test::office_value_table()) {
    for (auto s : matching_states(f, row.pattern)) {
      const auto where = row.label + " (" + mdp.states[s] + ")";
      c.near(sol.values[1][s], row.v1, 1e-9, "V1 " + where);
      c.near(sol.values[2][s], row.v2, 1e-9, "V2 " + where);
      for (int t = 1; t <= 2; ++t) {
        const auto& printed = t == 1 ? row.a1 : row.a2;
        const auto q = q_from_value(mdp, sol.values[t - 1], 1.0);
        const auto best = argmax_set(q, s, 1e-9);
        if (printed == "any") {
          c.expect(best.size() == all, "stage " + std::to_string(t) + " " + where + " is not a full tie");
        } else {
          const auto a = mdp.action_index(printed);
          c.expect(sol.policy.action[t][s] == a && best.front() == a,
                   "stage " + std::to_string(t) + " " + where + " chose " +
                       mdp.actions[sol.policy.action[t][s]].name + ", printed " + printed);
        }
      }
    }
  }
  const auto s0 = matching_states(f, test::office_value_table()[0].pattern).at(0);
  const auto q3 = q_from_value(mdp, sol.values[2], 1.0);
  c.near(q3(mdp.action_index("GetC"), s0), 2.43, 1e-9, "Q3(GetC, s0)");
  c.near(q3(mdp.action_index("PUM"), s0), 2.0, 1e-9, "Q3(PUM, s0)");
}

void trajectory_value(Check& c) {
  const auto ex = trajectory_example();
  const double v = evaluate_trajectory(ex.trajectory, ex.mdp, Discounted{0.9});
  c.near(v, 12.21931, 1e-4, "discounted prefix");
  const double bound = v + 10.0 * std::pow(0.9, 6) / (1.0 - 0.9);
  c.near(bound, 12.21931 + 53.1441, 1e-4, "best-case bound");
  c.expect(bound < 66.0, "bound not below 66");
}

FlatMdp compiled_robot() {
  auto doc = parse_flat_document(read_file(data_path("robot_chain.mdp")));
  for (auto& a : doc.mdp.actions) a = compile_implicit_action(a, doc.events);
  return doc.mdp;
}

void chain_structure(Check& c) {
  const auto mdp = compiled_robot();
  const auto cclk = mdp.action_index("Cclk");
  StationaryPolicy pi{std::vector<std::size_t>(mdp.num_states(), cclk)};
  auto named = [&](std::initializer_list<const char*> names) {
    StateSet out;
    for (auto n : names) out.insert(mdp.state_index(n));
    return out;
  };
  const auto cs = classify_chain(induce_chain(mdp, pi));
  c.expect(cs.recurrent_classes.size() == 1 &&
               cs.recurrent_classes[0] == named({"s6", "s7", "s8", "s9", "s10"}),
           "recurrent class is not the five mail states");
  c.expect(cs.transient == named({"s1", "s2", "s3", "s4", "s5"}), "transient set differs");
  c.expect(cs.absorbing.empty(), "unexpected absorbing states");

  pi.action[mdp.state_index("s9")] = mdp.action_index("Stay");
  const auto stay = classify_chain(induce_chain(mdp, pi));
  c.expect(stay.absorbing == named({"s9"}), "staying at s9 does not make it absorbing");
}

void goal_regression(Check& c) {
  const auto f = load_factored_file("delivery_ops.fmdp");
  const auto ops = strips_from_factored(f);
  const auto init = parse_assignment("M=t,RHM=f,CR=t,RHC=f", f.variables);
  const auto goal = parse_subgoals("CR=f,M=f", f.variables);
  const auto plan = regression_plan(ops, init, goal, 8);
  c.expect(plan.has_value(), "no plan found");
  if (!plan) return;
  const std::vector<std::string> expected{"CR=f,M=t,RHM=t", "RHC=t,M=t,RHM=t", "RHC=t,M=t", "M=t"};
  c.expect(plan->subgoals.size() == expected.size() + 1, "wrong number of subgoal sets");
  for (std::size_t i = 0; i < expected.size() && i + 1 < plan->subgoals.size(); ++i)
    c.expect(plan->subgoals[i + 1] == parse_subgoals(expected[i], f.variables),
             "SG" + std::to_string(i + 1) + " = {" + subgoal_text(plan->subgoals[i + 1], f.variables) + "}");
  c.expect(satisfies(init, plan->subgoals.back()), "initial state not in the last subgoal set");
  std::string names;
  for (auto i : plan->ops) names += (names.empty() ? "" : " ") + ops[i].name;
  c.expect(names == "GetC PUM DelC DelM", "plan is " + names);
}

void relevance(Check& c) {
  const auto f = load_factored_file("office.fmdp");
  const auto closure = relevant_closure(f, {*f.find_variable("CR")});
  const VariableSet want{*f.find_variable("CR"), *f.find_variable("RHC"), *f.find_variable("Loc")};
  c.expect(closure == want, "closure of {CR} differs");
  c.expect(f.state_count() == 400, "office domain is not 400 states");
  c.expect(project_abstract(f, closure).state_count() == 20, "projection is not 20 states");
}

void event_compilation(Check& c) {
  const auto doc = parse_flat_document(read_file(data_path("robot_chain.mdp")));
  const auto& clk = doc.mdp.actions[doc.mdp.action_index("Clk")];
  const auto compiled = matrix_to_dense(compile_implicit_action(clk, doc.events).matrix);
  const auto action = matrix_to_dense(clk.matrix);
  std::vector<DenseEvent> events;
  for (const auto& e : doc.events) events.push_back(dense_event(e));

  constexpr std::size_t kSamples = 1'000'000;
  Rng rng(20240601);
  for (std::size_t s = 0; s < action.size(); ++s) {
    std::vector<std::size_t> counts(action.size(), 0);
    for (std::size_t k = 0; k < kSamples; ++k) ++counts[interleave_step(action[s], events, rng)];
    for (std::size_t j = 0; j < action.size(); ++j) {
      const double p = compiled[s][j];
      const double phat = static_cast<double>(counts[j]) / kSamples;
      const double se = std::sqrt(p * (1.0 - p) / kSamples);
      const auto where = "row " + doc.mdp.states[s] + " col " + doc.mdp.states[j];
      if (p == 0.0 || p == 1.0)
        c.near(phat, p, 0.0, where);
      else
        c.near(phat, p, 3.0 * se, where);
    }
  }

  // Two events on independent coordinates commute.
  // States (M, CR) as 2*m + cr with value 0 meaning true.
  auto event = [](const std::string& name, std::size_t bit, double occ) {
    std::vector<std::vector<double>> rows(4, std::vector<double>(4, 0.0));
    ExogenousEvent e{name, {}, std::vector<double>(4, 0.0)};
    for (std::size_t s = 0; s < 4; ++s) {
      rows[s][s & ~bit] = 1.0;
      if (s & bit) e.occurrence[s] = occ;
    }
    e.matrix = dense_to_matrix(rows);
    return e;
  };
  const std::vector<ExogenousEvent> fwd{event("ArrM", 2, 0.2), event("ReqC", 1, 0.3)};
  const std::vector<ExogenousEvent> rev{fwd[1], fwd[0]};
  Rng r2(7);
  std::vector<std::vector<double>> rows;
  for (int s = 0; s < 4; ++s) rows.push_back(random_row(r2, 4, 3));
  const ActionRecord a{"a", dense_to_matrix(rows), 0.0, {}};
  const auto x = matrix_to_dense(compile_implicit_action(a, fwd).matrix);
  const auto y = matrix_to_dense(compile_implicit_action(a, rev).matrix);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) c.near(x[i][j], y[i][j], 1e-12, "order invariance");
}

void structured_vi(Check& c) {
  Rng rng(1997);
  std::uniform_int_distribution<std::size_t> nv(3, 8), na(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_simple_net_mdp(rng, nv(rng), na(rng));
    const auto dense = dense_from_nets(f);
    const auto flat = ground(f);
    const auto tag = "model " + std::to_string(trial);

    const auto fin = structured_value_iteration(f, FiniteHorizon{5});
    const auto oracle = dense_vi(dense, 1.0, 5);
    const auto flat_fin = vi_finite(flat, 5);
    const auto q_last = dense_q(dense, oracle[4], 1.0);
    for (std::size_t s = 0; s < dense.states(); ++s) {
      const auto x = decode_state(s, f.variables);
      const double v = fin.value.evaluate(x);
      c.near(v, oracle[5][s], 1e-9, tag + " finite vs dense");
      c.near(v, flat_fin.values[5][s], 1e-9, tag + " finite vs vi_finite");
      const auto best = dense_argmax(q_last, s, 1e-9);
      c.expect(std::find(best.begin(), best.end(), fin.policy.evaluate(x)) != best.end(),
               tag + " finite policy outside argmax at state " + std::to_string(s));
    }

    const auto disc = structured_value_iteration(f, DiscountedStop{0.9, 1e-4});
    const auto flat_disc = vi_discounted(flat, 0.9, 1e-4);
    const auto iterates = dense_vi(dense, 0.9, disc.iterations);
    const auto q_prev = dense_q(dense, iterates[disc.iterations - 1], 0.9);
    for (std::size_t s = 0; s < dense.states(); ++s) {
      const auto x = decode_state(s, f.variables);
      const double v = disc.value.evaluate(x);
      c.near(v, flat_disc.values[s], 1e-4, tag + " discounted vs vi_discounted");
      c.near(v, iterates.back()[s], 1e-9, tag + " discounted vs dense iterate");
      const auto best = dense_argmax(q_prev, s, 1e-9);
      c.expect(std::find(best.begin(), best.end(), disc.policy.evaluate(x)) != best.end(),
               tag + " discounted policy outside argmax at state " + std::to_string(s));
    }
  }
}

void minimization(Check& c) {
  Rng rng(45);
  const auto dup = duplicated_mdp(rng, 12);
  const auto p = refine_partition(dup.doubled, initial_reward_partition(dup.doubled), 1e-9);
  std::vector<std::vector<std::size_t>> pairs;
  for (std::size_t i = 0; i < 12; ++i) pairs.push_back({i, 12 + i});
  c.expect(p.blocks == pairs, "refinement did not recover the 12 clone pairs");
  const auto q = quotient(dup.doubled, p);
  const auto lifted = lift_solution(vi_discounted(q, 0.9, 1e-8), p, 24);
  const auto flat = vi_discounted(dup.doubled, 0.9, 1e-8);
  for (std::size_t s = 0; s < 24; ++s) c.near(lifted.values[s], flat.values[s], 1e-9, "lifted clone value");

  const auto f = load_factored_file("coffee_requests.fmdp");
  const auto mdp = ground(f);
  const auto init = initial_reward_partition(mdp);
  const auto cr = *f.find_variable("CR");
  const auto loc = *f.find_variable("LocC");
  c.expect(init.size() == 2, "initial partition is not {CR}, {not CR}");
  const auto refined = refine_partition(mdp, init, 1e-9);
  c.expect(refined.size() == 3, "expected three blocks, got " + std::to_string(refined.size()));
  c.expect(is_stable(mdp, refined, 1e-9), "refined partition unstable");
  for (const auto& block : refined.blocks) {
    const auto first = decode_state(block.front(), f.variables);
    for (auto s : block) {
      const auto x = decode_state(s, f.variables);
      c.expect(x[cr] == first[cr], "block mixes CR values");
      if (first[cr] == 1) c.expect(x[loc] == first[loc], "not-CR block mixes LocC values");
    }
    if (first[cr] == 0) c.expect(block.size() == 4, "CR block was split");
  }
  const auto lifted_small = lift_solution(vi_discounted(quotient(mdp, refined), 0.9, 1e-8), refined, mdp.num_states());
  const auto flat_small = vi_discounted(mdp, 0.9, 1e-8);
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    c.near(lifted_small.values[s], flat_small.values[s], 1e-9, "lifted instance value");
}

void search_equivalence(Check& c) {
  auto compare = [&](const FlatMdp& mdp, const std::string& tag) {
    const auto sol = vi_finite(mdp, 4);
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
      for (std::size_t d = 1; d <= 4; ++d) {
        const auto r = expectimax(mdp, s, d);
        c.expect(r.value == sol.values[d][s],
                 tag + " state " + mdp.states[s] + " depth " + std::to_string(d));
      }
  };
  compare(ground(load_factored_file("robot16.fmdp")), "corpus");
  Rng rng(3);
  for (int k = 0; k < 10; ++k) compare(random_mdp(rng, 12, 3, 0.9), "random " + std::to_string(k));
}

void solver_agreement(Check& c) {
  Rng rng(95);
  std::uniform_int_distribution<std::size_t> ns(2, 30), as(1, 5), support(1, 4);
  for (int k = 0; k < 50; ++k) {
    const auto mdp = random_mdp(rng, ns(rng), as(rng), 0.95, support(rng));
    const auto tag = "model " + std::to_string(k);
    SolveTrace vt, pt;
    const auto vi = vi_discounted(mdp, 0.95, 1e-8, &vt);
    const auto pi = policy_iteration(mdp, 0.95, StationaryPolicy{std::vector<std::size_t>(mdp.num_states(), 0)}, &pt);
    const auto mpi = modified_policy_iteration(mdp, 0.95, 5, 1e-8);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      c.near(vi.values[s], pi.values[s], 1e-6, tag + " vi vs pi");
      c.near(mpi.values[s], pi.values[s], 1e-6, tag + " mpi vs pi");
    }
    for (std::size_t i = 1; i < pt.policy_values.size(); ++i)
      for (std::size_t s = 0; s < mdp.num_states(); ++s)
        c.expect(pt.policy_values[i][s] >= pt.policy_values[i - 1][s] - 1e-9, tag + " pi not monotone");
    for (std::size_t i = 1; i < vt.residuals.size(); ++i)
      c.expect(vt.residuals[i] <= 0.95 * vt.residuals[i - 1] + 1e-12, tag + " vi sweep not a contraction");
  }
}

struct Item {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Item> criteria{
      {1, "finite-horizon value table and policy", 1.0, value_table},
      {2, "trajectory value and best-case bound", 0.1, trajectory_value},
      {3, "chain structure of the clockwise-moving robot", 0.1, chain_structure},
      {4, "goal regression subgoals and plan", 0.1, goal_regression},
      {5, "relevance closure and projection size", 0.1, relevance},
      {6, "event compilation against sampled interleaving", 30.0, event_compilation},
      {7, "structured VI against flat solvers", 60.0, structured_vi},
      {8, "minimization and solution lifting", 5.0, minimization},
      {9, "expectimax equals finite-horizon DP", 10.0, search_equivalence},
      {10, "VI, PI and MPI agree", 60.0, solver_agreement},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s)
      check.expect(false, "runtime " + std::to_string(secs) + " s over budget " + std::to_string(cr.budget_s) + " s");
    const bool ok = check.failed == 0;
    failed += !ok;
    std::printf("%s %2d %s (%.3f s)\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs);
    for (const auto& f : check.failures) std::printf("       %s\n", f.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
