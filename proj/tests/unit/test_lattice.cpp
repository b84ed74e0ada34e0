#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gccsolver/errors.hpp"
#include "gccsolver/lattice.hpp"
#include "oracles.hpp"

namespace gccsolver {
namespace {

using testing::all_paths;
using testing::one_step_tree;
using testing::path_probability;

TEST(Binomial, OneStepSymmetricWalk) {
  const auto m = build_binomial(1, 1.0, 0.0, 1.0, false);
  ASSERT_EQ(m.tree.size(), 3u);
  EXPECT_EQ(m.tree.dim(), 0u);
  const auto kids = m.tree.children(0);
  EXPECT_DOUBLE_EQ(m.W[kids[0]], 1.0);
  EXPECT_DOUBLE_EQ(m.W[kids[1]], -1.0);
  EXPECT_DOUBLE_EQ(m.tree.probs(0)[0], 0.5);
  EXPECT_DOUBLE_EQ(m.tree.probs(0)[1], 0.5);
}

TEST(Binomial, TradedIncrementsScaleWithStep) {
  const auto m = build_binomial(2, 1.0, 0.0, 1.0, true);
  EXPECT_EQ(m.tree.terminals().size(), 4u);
  ASSERT_EQ(m.tree.dim(), 1u);
  for (NodeId v = 0; v < m.tree.size(); ++v) {
    for (double s : m.tree.increments(v)) EXPECT_NEAR(std::abs(s), std::sqrt(0.5), 1e-15);
  }
}

TEST(Binomial, DriftedMeanOnRecombiningLattice) {
  const auto m = build_binomial(50, 1.0, 0.5, 1.0, false, Layout::kRecombining);
  EXPECT_TRUE(m.tree.recombining());
  EXPECT_EQ(m.tree.size(), 51u * 52u / 2u);
  // Terminal reach probabilities are binomial(50, 1/2).
  double mean = 0.0, total = 0.0;
  const auto level = m.tree.level(50);
  for (std::size_t k = 0; k < level.size(); ++k) {
    const NodeId v = level[k];
    const double w = std::exp(std::lgamma(51.0) - std::lgamma(k + 1.0) - std::lgamma(51.0 - k) - 50 * std::log(2.0));
    mean += w * m.drifted[v];
    total += w;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(mean, 0.5, 1e-12);
}

TEST(Binomial, FullTreeMeanMatchesPathEnumeration) {
  const auto m = build_binomial(8, 1.0, 0.5, 1.0, false);
  double mean = 0.0;
  for (const auto& path : all_paths(m.tree)) mean += path_probability(m.tree, path) * m.drifted[path.back()];
  EXPECT_NEAR(mean, 0.5, 1e-12);
}

TEST(Binomial, RejectsBadParameters) {
  EXPECT_THROW(build_binomial(0, 1.0, 0.0, 1.0, false), ModelError);
  EXPECT_THROW(build_binomial(2, 1.0, 0.0, -1.0, false), ModelError);
  EXPECT_THROW(build_binomial(2, 0.0, 0.0, 1.0, false), ModelError);
}

TEST(Trinomial, SymmetricPatternIsValid) {
  const auto m = build_trinomial(1, 1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0, 0.0, -1.0}, {1.0, -2.0, 1.0});
  EXPECT_TRUE(validate_tree(m.tree).ok());
  EXPECT_TRUE(check_one_step_arbitrage(m.tree, 0));
}

TEST(Trinomial, AllPositiveIncrementsRejected) {
  EXPECT_THROW(build_trinomial(1, 1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}), ModelError);
}

TEST(Trinomial, TwoStepsHaveNineLeavesAndOneFreeParameterPerNode) {
  for (auto pattern : {CorrelationPattern::kOrthogonal, CorrelationPattern::kPartial, CorrelationPattern::kSkewed}) {
    const auto m = build_incomplete_trinomial(2, 1.0, 1.0, 1.0, pattern);
    EXPECT_EQ(m.tree.terminals().size(), 9u);
    EXPECT_TRUE(validate_tree(m.tree).ok());
  }
}

TEST(Validation, WellFormedBinomialHasNoViolations) {
  EXPECT_TRUE(validate_tree(build_binomial(4, 1.0, 0.0, 1.0, true).tree).ok());
}

TEST(Validation, NormalizationViolationReported) {
  const auto tree = one_step_tree({0.6, 0.5}, {1.0, -1.0});
  const auto report = validate_tree(tree);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations[0].node, 0u);
  EXPECT_EQ(report.violations[0].kind, ViolationKind::kProbabilityNormalization);
  EXPECT_THROW(require_valid(tree), ModelError);
}

TEST(Validation, ArbitrageViolationReported) {
  const auto tree = one_step_tree({0.5, 0.5}, {1.0, 2.0});
  const auto report = validate_tree(tree);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations[0].kind, ViolationKind::kArbitrage);
  EXPECT_FALSE(check_one_step_arbitrage(tree, 0));
}

TEST(Validation, NoAssetIsArbitrageFree) {
  EXPECT_TRUE(check_one_step_arbitrage(one_step_tree({0.5, 0.5}, {}), 0));
}

TEST(Validation, RelativeInteriorInTwoDimensions) {
  // Square around the origin: inside. Three points on one side: outside.
  const double square[] = {1, 0, 0, 1, -1, 0, 0, -1};
  EXPECT_TRUE(zero_in_relative_interior(square, 4, 2));
  const double halfplane[] = {1, 1, 1, -1, 0, 1};
  EXPECT_FALSE(zero_in_relative_interior(halfplane, 3, 2));
  // Segment through the origin inside a plane: zero is in the relative interior.
  const double segment[] = {1, 1, -2, -2};
  EXPECT_TRUE(zero_in_relative_interior(segment, 2, 2));
  // Origin is a vertex of the hull: boundary, so arbitrage.
  const double vertex[] = {0, 0, 1, 0, 0, 1};
  EXPECT_FALSE(zero_in_relative_interior(vertex, 3, 2));
}

class StoppedPayoff : public ::testing::Test {
 protected:
  BinomialModel m = build_binomial(2, 1.0, 0.0, 1.0, false);
  AdaptedProcess X = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return m.W[v]; });
  AdaptedProcess Y = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return m.W[v] + 0.5; });
};

TEST_F(StoppedPayoff, BuyerStopsAtRoot) {
  const auto R = stopped_payoff(X, Y, StoppingRule::immediate(m.tree), StoppingRule::at_maturity(m.tree));
  for (double r : R.values()) EXPECT_DOUBLE_EQ(r, X[0]);
}

TEST_F(StoppedPayoff, SellerStopsAtRoot) {
  const auto R = stopped_payoff(X, Y, StoppingRule::at_maturity(m.tree), StoppingRule::immediate(m.tree));
  for (double r : R.values()) EXPECT_DOUBLE_EQ(r, Y[0]);
}

TEST_F(StoppedPayoff, TiesGoToTheBuyer) {
  const auto R = stopped_payoff(X, Y, StoppingRule::immediate(m.tree), StoppingRule::immediate(m.tree));
  for (double r : R.values()) EXPECT_DOUBLE_EQ(r, X[0]);
}

TEST_F(StoppedPayoff, StopOnUpMoveEnumeratedByPath) {
  const NodeId up = m.tree.children(0)[0];
  const NodeId nodes[] = {up};
  const auto tau = StoppingRule::from_nodes(m.tree, nodes);
  const auto R = stopped_payoff(X, Y, tau, StoppingRule::at_maturity(m.tree));
  for (const auto& path : all_paths(m.tree)) {
    const double expect = path[1] == up ? X[up] : X[path.back()];
    EXPECT_DOUBLE_EQ(R.at(path.back()), expect);
  }
}

TEST_F(StoppedPayoff, StaysWithinPayoffRange) {
  const auto rules = enumerate_stopping_rules(m.tree);
  const double lo = std::min(X.min(), Y.min()), hi = std::max(X.max(), Y.max());
  for (const auto& tau : rules) {
    for (const auto& sigma : rules) {
      const auto R = stopped_payoff(X, Y, tau, sigma);
      for (double r : R.values()) {
        EXPECT_GE(r, lo);
        EXPECT_LE(r, hi);
      }
    }
  }
}

TEST(HittingRule, EqualProcessesStopAtRoot) {
  const auto m = build_binomial(3, 1.0, 0.0, 1.0, false);
  EXPECT_TRUE(hitting_rule(m.W, m.W).marked(0));
}

TEST(HittingRule, StrictDominanceStopsAtMaturity) {
  const auto m = build_binomial(3, 1.0, 0.0, 1.0, false);
  const auto V = AdaptedProcess::from_function(
      m.tree, [&](NodeId v) { return m.W[v] + (m.tree.is_terminal(v) ? 0.0 : 1.0); });
  const auto rule = hitting_rule(V, m.W);
  EXPECT_TRUE(same_stopping_time(rule, StoppingRule::at_maturity(m.tree)));
  // The stopped value equals L at the stop on every path.
  const auto stopped_V = stopped_value(V, rule), stopped_L = stopped_value(m.W, rule);
  for (std::size_t i = 0; i < stopped_V.values().size(); ++i) {
    EXPECT_DOUBLE_EQ(stopped_V.values()[i], stopped_L.values()[i]);
  }
}

TEST(HittingRule, DominationViolationThrows) {
  const auto m = build_binomial(2, 1.0, 0.0, 1.0, false);
  const auto V = AdaptedProcess::constant(m.tree, -10.0);
  EXPECT_THROW(hitting_rule(V, m.W), DominationError);
}

TEST(Enumeration, CountsMatchPowersOfTwo) {
  EXPECT_EQ(enumerate_stopping_rules(build_binomial(1, 1.0, 0.0, 1.0, false).tree).size(), 2u);
  EXPECT_EQ(enumerate_stopping_rules(build_binomial(2, 1.0, 0.0, 1.0, false).tree).size(), 8u);
  const auto tree = build_binomial(3, 1.0, 0.0, 1.0, false).tree;
  const auto rules = enumerate_stopping_rules(tree);
  ASSERT_EQ(rules.size(), 128u);
  std::set<std::vector<std::uint8_t>> distinct;
  for (const auto& r : rules) {
    for (NodeId t : tree.terminals()) EXPECT_TRUE(r.marked(t));
    distinct.emplace(r.marks().begin(), r.marks().end());
  }
  EXPECT_EQ(distinct.size(), 128u);
}

TEST(Enumeration, CapRefusalNamesRequiredCap) {
  const auto tree = build_binomial(5, 1.0, 0.0, 1.0, false).tree;  // 31 non-terminal nodes
  try {
    enumerate_stopping_rules(tree);
    FAIL() << "expected refusal";
  } catch (const EnumerationCapError& e) {
    EXPECT_EQ(e.required(), 31u);
  }
}

TEST(StoppingRules, ClosureAndOrdering) {
  const auto tree = build_binomial(3, 1.0, 0.0, 1.0, false).tree;
  const auto early = StoppingRule::immediate(tree), late = StoppingRule::at_maturity(tree);
  EXPECT_TRUE(stops_no_later(early, late));
  EXPECT_FALSE(stops_no_later(late, early));
  // Marks below a stop node do not change the stopping time.
  std::vector<std::uint8_t> marks(tree.size(), 1);
  const StoppingRule all(tree, marks);
  EXPECT_TRUE(same_stopping_time(all, early));
  EXPECT_EQ(all.hash(), early.hash());
  EXPECT_NE(early.hash(), late.hash());
  EXPECT_EQ(early.first_stop_nodes(), std::vector<NodeId>{0});
  EXPECT_TRUE(late.first_stop_nodes().empty());
}

TEST(StoppingRules, PathDependentRuleRejectedOnLattice) {
  const auto m = build_binomial(3, 1.0, 0.0, 1.0, false, Layout::kRecombining);
  // Stop at the up node after one step: the middle node at t = 2 is then
  // reached both stopped and live.
  const NodeId up = m.tree.children(0)[0];
  const NodeId nodes[] = {up};
  EXPECT_THROW(stop_profile(StoppingRule::from_nodes(m.tree, nodes)), PathDependenceError);
}

TEST(Trading, GainsTelescope) {
  const auto m = build_binomial(3, 1.0, 0.0, 1.0, true);
  std::vector<double> h(m.tree.size(), 2.0);
  const auto gains = trading_gains(TradingStrategy(m.tree, h));
  for (NodeId t : m.tree.terminals()) EXPECT_NEAR(gains.at(t), 2.0 * m.W[t], 1e-14);
}

}  // namespace
}  // namespace gccsolver
