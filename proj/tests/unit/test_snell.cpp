#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gccsolver/errors.hpp"
#include "gccsolver/random_models.hpp"
#include "gccsolver/snell.hpp"
#include "oracles.hpp"

namespace gccsolver {
namespace {

TEST(Snell, ConstantPayoffStopsAtOnce) {
  const auto m = build_incomplete_trinomial(3, 1.0, 1.0, 1.0, CorrelationPattern::kPartial);
  const Valuer valuer(m.tree, Agent::without_endowment(m.tree, 1.0));
  const auto r = snell_envelope(valuer, AdaptedProcess::constant(m.tree, 2.0));
  for (double v : r.envelope.values()) EXPECT_NEAR(v, 2.0, 1e-12);
  EXPECT_TRUE(r.optimal_rule.marked(0));
}

TEST(Snell, IncreasingDeterministicPayoffWaits) {
  const auto m = build_incomplete_trinomial(3, 1.0, 1.0, 1.0, CorrelationPattern::kSkewed);
  const Valuer valuer(m.tree, Agent::without_endowment(m.tree, 3.0));
  const auto L = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return 1.0 + m.tree.time(v); });
  const auto r = snell_envelope(valuer, L);
  for (double v : r.envelope.values()) EXPECT_NEAR(v, 2.0, 1e-12);
  EXPECT_TRUE(same_stopping_time(r.optimal_rule, StoppingRule::at_maturity(m.tree)));
}

TEST(Snell, AmericanPutMatchesClassicalEnvelope) {
  const auto m = build_binomial(8, 1.0, 0.0, 0.2, true);
  const auto L = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return std::max(-m.W[v], 0.0); });
  const auto classical = testing::risk_neutral_dp(
      m.tree, [&](NodeId v) { return L[v]; }, [&](NodeId v, double cont) { return std::max(L[v], cont); });
  const auto classical_V = AdaptedProcess(m.tree, classical);
  for (double alpha : {0.5, 5.0}) {
    const Valuer valuer(m.tree, Agent::without_endowment(m.tree, alpha));
    const auto r = snell_envelope(valuer, L);
    for (NodeId v = 0; v < m.tree.size(); ++v) EXPECT_NEAR(r.envelope[v], classical[v], 1e-10);
    EXPECT_TRUE(same_stopping_time(r.optimal_rule, hitting_rule(classical_V, L)));
  }
}

class RandomSnell : public ::testing::Test {
 protected:
  std::mt19937_64 rng = instance_rng(31, 0);
  EventTree tree = random_incomplete_tree(rng, 2);  // 4 non-terminal nodes
  Valuer valuer{tree, Agent{1.4, random_claim(tree, rng)}};
  AdaptedProcess L = random_process(tree, rng);
  SnellResult r = snell_envelope(valuer, L);
};

TEST_F(RandomSnell, RootIsExhaustiveOptimumAndHittingRuleAttainsIt) {
  double best = -1e300;
  for (const auto& rule : enumerate_stopping_rules(tree)) best = std::max(best, value_at(valuer, L, rule));
  EXPECT_NEAR(r.root_value, best, 1e-9);
  EXPECT_NEAR(value_at(valuer, L, r.optimal_rule), r.root_value, 1e-9);
}

TEST_F(RandomSnell, DominationAndRecursion) {
  for (NodeId v = 0; v < tree.size(); ++v) {
    EXPECT_GE(r.envelope[v], L[v]);
    if (tree.is_terminal(v)) {
      EXPECT_EQ(r.envelope[v], L[v]);
    }
  }
  EXPECT_LE(recursion_residual(valuer, L, r), 1e-12);
}

TEST_F(RandomSnell, SupermartingaleUnderRules) {
  std::vector<StoppingRule> rules{StoppingRule::immediate(tree), r.optimal_rule};
  EXPECT_LE(check_supermartingale(valuer, r, rules), 1e-12);
  for (int k = 0; k < 200; ++k) rules.push_back(random_rule(tree, rng));
  EXPECT_LE(check_supermartingale(valuer, r, rules), 1e-9);
}

TEST_F(RandomSnell, MonotoneInPayoff) {
  const auto L2 = AdaptedProcess::from_function(tree, [&](NodeId v) { return L[v] + 0.1 * (v % 3); });
  const auto r2 = snell_envelope(valuer, L2);
  for (NodeId v = 0; v < tree.size(); ++v) EXPECT_LE(r.envelope[v], r2.envelope[v] + 1e-12);
}

TEST_F(RandomSnell, RatioRepresentationAgrees) {
  const auto rep = ratio_representation(valuer, L);
  for (NodeId v = 0; v < tree.size(); ++v) EXPECT_NEAR(rep.ratio[v], r.envelope[v], 1e-9);
  EXPECT_LE(rep.supermartingale_violation, 1e-10);
}

TEST(Ratio, ZeroAndConstantPayoff) {
  auto rng = instance_rng(32, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{2.0, random_claim(tree, rng)});
  const auto zero = ratio_representation(valuer, AdaptedProcess::constant(tree, 0.0));
  for (NodeId v = 0; v < tree.size(); ++v) {
    EXPECT_NEAR(zero.A[v], zero.B[v], 1e-12 * std::abs(zero.B[v]));
    EXPECT_NEAR(zero.ratio[v], 0.0, 1e-12);
  }
  const auto c = ratio_representation(valuer, AdaptedProcess::constant(tree, 1.5));
  for (double x : c.ratio.values()) EXPECT_NEAR(x, 1.5, 1e-12);
}

TEST(Ratio, FourStepTreeMatchesEnvelope) {
  auto rng = instance_rng(33, 0);
  const auto tree = random_incomplete_tree(rng, 4);
  const Valuer valuer(tree, Agent{0.9, random_claim(tree, rng)});
  const auto L = random_process(tree, rng);
  const auto rep = ratio_representation(valuer, L);
  const auto r = snell_envelope(valuer, L);
  for (NodeId v = 0; v < tree.size(); ++v) EXPECT_NEAR(rep.ratio[v], r.envelope[v], 1e-9);
}

TEST(Restriction, LocalityOfEnvelope) {
  auto rng = instance_rng(34, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.0, random_claim(tree, rng)});
  const auto L1 = random_process(tree, rng);
  EXPECT_TRUE(restriction_check(valuer, L1, L1, StoppingRule::immediate(tree)));
  // Differ only strictly before time 2.
  const auto L2 = AdaptedProcess::from_function(tree, [&](NodeId v) {
    return tree.time_index(v) < 2 ? L1[v] - 1.0 : L1[v];
  });
  std::vector<NodeId> at2(tree.level(2).begin(), tree.level(2).end());
  const auto sigma = StoppingRule::from_nodes(tree, at2);
  EXPECT_TRUE(restriction_check(valuer, L1, L2, sigma));
  EXPECT_THROW(restriction_check(valuer, L1, L2, StoppingRule::immediate(tree)), ContractViolation);
}

TEST(Restriction, AbsorbedPayoffIsItsEnvelope) {
  auto rng = instance_rng(35, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.0, random_claim(tree, rng)});
  const auto L = random_process(tree, rng);
  // Freeze L from time 1 on at its time-1 value.
  std::vector<double> frozen(tree.size());
  for (NodeId v : tree.order()) {
    frozen[v] = tree.time_index(v) <= 1 ? L[v] : frozen[tree.parent(v)];
  }
  const AdaptedProcess absorbed(tree, frozen);
  const auto r = snell_envelope(valuer, absorbed);
  for (NodeId v : tree.level(1)) EXPECT_NEAR(r.envelope[v], absorbed[v], 1e-12);
}

}  // namespace
}  // namespace gccsolver
