#include <gtest/gtest.h>

#include "dtp/chain.hpp"
#include "dtp/events.hpp"
#include "dtp/io.hpp"
#include "support.hpp"

using namespace dtp;
using namespace dtp::test;

namespace {

FlatMdp robot() {
  auto doc = parse_flat_document(read_file(data_path("robot_chain.mdp")));
  for (auto& a : doc.mdp.actions) a = compile_implicit_action(a, doc.events);
  return doc.mdp;
}

StateSet range(std::size_t lo, std::size_t hi) {
  StateSet out;
  for (auto s = lo; s < hi; ++s) out.insert(s);
  return out;
}

MarkovChain chain_of(std::vector<std::vector<double>> rows) {
  MarkovChain c;
  for (std::size_t i = 0; i < rows.size(); ++i) c.states.push_back("c" + std::to_string(i));
  c.matrix = dense_to_matrix(rows);
  return c;
}

}  // namespace

TEST(Chain, CounterclockwiseRobotHasTheMailStatesRecurrent) {
  const auto m = robot();
  StationaryPolicy pi{std::vector<std::size_t>(10, m.action_index("Cclk"))};
  const auto cs = classify_chain(induce_chain(m, pi));
  ASSERT_EQ(cs.recurrent_classes.size(), 1u);
  EXPECT_EQ(cs.recurrent_classes[0], range(5, 10));
  EXPECT_EQ(cs.transient, range(0, 5));
  EXPECT_TRUE(cs.absorbing.empty());
}

TEST(Chain, StayingInTheOfficeIsAbsorbing) {
  const auto m = robot();
  StationaryPolicy pi{std::vector<std::size_t>(10, m.action_index("Cclk"))};
  pi.action[8] = m.action_index("Stay");
  const auto cs = classify_chain(induce_chain(m, pi));
  EXPECT_EQ(cs.absorbing, StateSet{8});
  ASSERT_EQ(cs.recurrent_classes.size(), 1u);
  EXPECT_EQ(cs.recurrent_classes[0], StateSet{8});
}

TEST(Chain, InducedChainTakesThePolicyRows) {
  const auto m = robot();
  StationaryPolicy pi{std::vector<std::size_t>(10, 0)};
  pi.action[3] = 1;
  const auto c = induce_chain(m, pi);
  EXPECT_EQ(c.states, m.states);
  const auto dense = matrix_to_dense(c.matrix);
  EXPECT_EQ(dense[3], matrix_to_dense(m.transitions(1))[3]);
  EXPECT_EQ(dense[4], matrix_to_dense(m.transitions(0))[4]);
}

TEST(Chain, EpsilonIgnoresTinyArcs) {
  const auto c = chain_of({{1.0 - 1e-12, 1e-12}, {0.0, 1.0}});
  EXPECT_EQ(classify_chain(c, 0.0).absorbing, StateSet{1});
  EXPECT_EQ(classify_chain(c, 1e-9).absorbing, (StateSet{0, 1}));
}

TEST(Chain, ComponentsComeSinksFirst) {
  const auto c = chain_of({{0.5, 0.5, 0, 0}, {0.5, 0, 0.5, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
  const auto scc = strongly_connected_components(c.matrix);
  ASSERT_EQ(scc.size(), 2u);
  EXPECT_EQ(scc[0], (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(scc[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(is_closed(c, {2, 3}));
  EXPECT_FALSE(is_closed(c, {0, 1}));
}

TEST(Chain, ClassificationInvariantsOnRandomChains) {
  Rng rng(31);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 3 + k % 10;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(random_row(rng, n, 1 + k % 3));
    const auto c = chain_of(rows);
    const auto cs = classify_chain(c);
    StateSet all = cs.transient;
    for (const auto& r : cs.recurrent_classes) {
      EXPECT_TRUE(is_closed(c, r));
      for (auto s : r) EXPECT_TRUE(all.insert(s).second);
    }
    EXPECT_EQ(all, range(0, n));
    EXPECT_FALSE(cs.recurrent_classes.empty());
    for (auto s : cs.absorbing) {
      EXPECT_EQ(rows[s][s], 1.0);
    }
  }
}
