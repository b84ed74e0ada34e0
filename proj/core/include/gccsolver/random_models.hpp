#pragma once

// Randomized trees, claims and rules for property testing.

#include <random>

#include "gccsolver/exputil.hpp"
#include "gccsolver/lattice.hpp"

namespace gccsolver {

/// Deterministic generator for instance `index` of a run seeded with `seed`.
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index);

/// Full trinomial tree, one traded asset, independently drawn branch
/// probabilities and increments per node (up > 0 > down, so no arbitrage).
EventTree random_incomplete_tree(std::mt19937_64& rng, int steps);

/// Full binomial tree with random probabilities and up/down moves per node.
EventTree random_complete_tree(std::mt19937_64& rng, int steps);

TerminalClaim random_claim(const EventTree& tree, std::mt19937_64& rng, double lo = -3.0, double hi = 3.0);
AdaptedProcess random_process(const EventTree& tree, std::mt19937_64& rng, double lo = -3.0, double hi = 3.0);
double random_risk_aversion(std::mt19937_64& rng, double lo = 0.2, double hi = 5.0);
/// Each non-terminal node marked independently with probability p.
StoppingRule random_rule(const EventTree& tree, std::mt19937_64& rng, double p = 0.3);
/// Random holdings in [-scale, scale].
TradingStrategy random_strategy(const EventTree& tree, std::mt19937_64& rng, double scale = 1.0);

}  // namespace gccsolver
