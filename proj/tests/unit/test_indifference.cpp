#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gccsolver/errors.hpp"
#include "gccsolver/indifference.hpp"
#include "gccsolver/random_models.hpp"
#include "oracles.hpp"

namespace gccsolver {
namespace {

using testing::risk_neutral_dp;

TEST(Valuation, ConstantClaimIsItsOwnValue) {
  const auto m = build_incomplete_trinomial(3, 1.0, 1.0, 1.0, CorrelationPattern::kSkewed);
  const Valuer valuer(m.tree, Agent{2.0, TerminalClaim::from_process(m.untraded)});
  const auto V = european_value_process(valuer, TerminalClaim::constant(m.tree, 3.0));
  for (double v : V.values()) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Valuation, CompleteTreeMatchesRiskNeutralDp) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const auto tree = random_complete_tree(rng, 4);
    const auto H = random_claim(tree, rng);
    const auto oracle = risk_neutral_dp(tree, [&](NodeId v) { return H.at(v); }, [](NodeId, double e) { return e; });
    for (double alpha : {0.3, 4.0}) {
      const Valuer valuer(tree, Agent{alpha, random_claim(tree, rng)});
      const auto V = european_value_process(valuer, H);
      for (NodeId v = 0; v < tree.size(); ++v) EXPECT_NEAR(V[v], oracle[v], 1e-10);
    }
  }
}

TEST(Valuation, NoHedgingClosedForm) {
  // A = first branch, P[A] = p; H = n 1_A.
  for (double n : {1.0, 5.0, 20.0}) {
    const double p = 0.3, alpha = 1.0;
    const auto tree = testing::one_step_tree({p, 1.0 - p}, {});
    const auto H = TerminalClaim::from_function(tree, [&](NodeId v) { return v == tree.children(0)[0] ? n : 0.0; });
    const double pi = value_at(Valuer(tree, Agent::without_endowment(tree, alpha)), H);
    EXPECT_NEAR(std::exp(-alpha * pi), std::exp(-alpha * n) * p + 1.0 - p, 1e-12);
    EXPECT_LE(pi, -std::log(1.0 - p) / alpha);
  }
}

TEST(ValueAt, DeterministicStoppedPayoff) {
  const auto m = build_binomial(3, 1.0, 0.0, 1.0, false);
  const double delta = 0.5;
  const auto X = m.W;
  const auto Y = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return m.W[v] + delta; });
  const auto R = stopped_payoff(X, Y, StoppingRule::at_maturity(m.tree), StoppingRule::immediate(m.tree));
  EXPECT_NEAR(value_at(Valuer(m.tree, Agent::without_endowment(m.tree, 1.0)), R), delta, 1e-15);
  EXPECT_NEAR(value_at(Valuer(m.tree, Agent::without_endowment(m.tree, 2.0)), -R), -delta, 1e-15);
  // Stop-at-root rule: the value is X_0 regardless of the other rule.
  const Valuer valuer(m.tree, Agent::without_endowment(m.tree, 1.0));
  EXPECT_NEAR(value_at(valuer, X, StoppingRule::immediate(m.tree)), X[0], 1e-15);
}

TEST(ValueAt, StoppedValueProcessAgreesWithLiftedClaim) {
  auto rng = instance_rng(4, 1);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.2, random_claim(tree, rng)});
  const auto L = random_process(tree, rng);
  for (int k = 0; k < 20; ++k) {
    const auto rule = random_rule(tree, rng);
    EXPECT_NEAR(value_at(valuer, L, rule), value_at(valuer, stopped_value(L, rule)), 1e-12);
  }
}

TEST(ValueAt, CompleteTreeBuyerAndSellerValuesOpposite) {
  std::mt19937_64 rng(8);
  const auto tree = random_complete_tree(rng, 2);
  const auto X = random_process(tree, rng, -1.0, 1.0);
  const auto Y = AdaptedProcess::from_function(tree, [&](NodeId v) { return X[v] + 0.4; });
  const Valuer b(tree, Agent{0.7, random_claim(tree, rng)}), a(tree, Agent{3.0, random_claim(tree, rng)});
  for (const auto& tau : enumerate_stopping_rules(tree)) {
    for (const auto& sigma : enumerate_stopping_rules(tree)) {
      const auto R = stopped_payoff(X, Y, tau, sigma);
      EXPECT_NEAR(value_at(b, R), -value_at(a, -R), 1e-10);
    }
  }
}

TEST(Duality, GapVanishesForZeroClaimAtPricingMeasure) {
  auto rng = instance_rng(2, 3);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.5, random_claim(tree, rng)});
  EXPECT_NEAR(dual_gap(valuer, TerminalClaim::constant(tree, 0.0), valuer.pricing_measure()), 0.0, 1e-12);
}

TEST(Duality, CompleteTreeGapIsZeroForAnyClaim) {
  std::mt19937_64 rng(21);
  const auto tree = random_complete_tree(rng, 3);
  const Valuer valuer(tree, Agent::without_endowment(tree, 2.0));
  const auto Q = complete_market_measure(tree);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(dual_gap(valuer, random_claim(tree, rng), Q), 0.0, 1e-10);
}

TEST(Duality, SampledMeasuresNeverBeatTheValue) {
  auto rng = instance_rng(3, 7);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{0.8, random_claim(tree, rng)});
  const auto H = random_claim(tree, rng);
  const auto opt = optimal_dual_measure(valuer, H);
  EXPECT_NEAR(dual_gap(valuer, H, opt), 0.0, 1e-9);
  double best = 1e300;
  for (int k = 0; k < 1000; ++k) {
    const auto Q = sample_martingale_measure(tree, opt.transition_prob, valuer.tilted().tilted_prob, rng, 0.05);
    const double gap = dual_gap(valuer, H, Q);
    EXPECT_GE(gap, -1e-8);
    best = std::min(best, gap);
  }
  EXPECT_LE(best, 1e-3);
}

TEST(Endowment, IdentityResiduals) {
  auto rng = instance_rng(6, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const auto H = random_claim(tree, rng);
  EXPECT_EQ(endowment_identity_check(tree, 1.0, TerminalClaim::constant(tree, 0.0), H), 0.0);
  EXPECT_LE(endowment_identity_check(tree, 1.0, TerminalClaim::constant(tree, 1.7), H), 1e-9);
  const auto C = random_claim(tree, rng);
  EXPECT_LE(endowment_identity_check(tree, 2.5, C, H), 1e-9 * (1 + H.sup_abs() + C.sup_abs()));
}

TEST(Primal, TwoProblemRatioMatchesDualDp) {
  auto rng = instance_rng(12, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Agent agent{1.1, random_claim(tree, rng)};
  const auto H = random_claim(tree, rng);
  const auto dual = european_value_process(Valuer(tree, agent), H);
  const auto primal = primal_value_process(tree, agent, H);
  for (NodeId v = 0; v < tree.size(); ++v) EXPECT_NEAR(dual[v], primal[v], 1e-9);
}

TEST(Properties, BoundednessMonotonicityAndContinuity) {
  auto rng = instance_rng(13, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.9, random_claim(tree, rng)});
  const auto H1 = random_claim(tree, rng);
  const auto bump = random_claim(tree, rng, 0.0, 1.0);
  const auto H2 = H1 + bump;
  const auto V1 = european_value_process(valuer, H1), V2 = european_value_process(valuer, H2);
  for (NodeId v = 0; v < tree.size(); ++v) {
    EXPECT_LE(std::abs(V1[v]), H1.sup_abs() + 1e-12);
    EXPECT_LE(V1[v], V2[v] + 1e-12);
  }
  EXPECT_LT(V1[0], V2[0]);
  const double eps = 1e-3;
  EXPECT_LE(std::abs(value_at(valuer, H1 + bump * eps) - V1[0]), eps * bump.sup_abs() + 1e-12);
}

TEST(Properties, ReplicationInvariance) {
  auto rng = instance_rng(14, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{0.6, random_claim(tree, rng)});
  const auto H = random_claim(tree, rng);
  const auto gains = trading_gains(random_strategy(tree, rng));
  EXPECT_NEAR(value_at(valuer, H + gains + 1.25), value_at(valuer, H) + 1.25, 1e-9);
  EXPECT_NEAR(value_at(valuer, gains + 1.25), 1.25, 1e-9);
}

TEST(Properties, TimeConsistencyThroughStoppedValue) {
  auto rng = instance_rng(15, 0);
  const auto tree = random_incomplete_tree(rng, 3);
  const Valuer valuer(tree, Agent{1.3, random_claim(tree, rng)});
  const auto H = random_claim(tree, rng);
  const auto V = european_value_process(valuer, H);
  for (int k = 0; k < 10; ++k) {
    const auto sigma = random_rule(tree, rng);
    EXPECT_NEAR(value_at(valuer, stopped_value(V, sigma)), V[0], 1e-10);
  }
}

TEST(Csv, ValueProcessFormat) {
  const auto tree = build_binomial(1, 1.0, 0.0, 1.0, false).tree;
  std::ostringstream os;
  write_value_csv(os, AdaptedProcess::constant(tree, 1.0 / 3.0));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "node,time,value");
  EXPECT_NE(os.str().find("0.33333333333333331"), std::string::npos);
}

}  // namespace
}  // namespace gccsolver
