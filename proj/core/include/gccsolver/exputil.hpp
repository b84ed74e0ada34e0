#pragma once

// Exponential-utility primitives on event trees: one-step certainty
// equivalents with optimal hedges, endowment tilting, the entropy minimizing
// martingale measure and indirect utility by dynamic programming.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "gccsolver/lattice.hpp"

namespace gccsolver {

/// Exponential-utility agent: U(x) = -exp(-risk_aversion * x), terminal endowment C.
struct Agent {
  double risk_aversion;
  TerminalClaim endowment;

  static Agent without_endowment(const EventTree& tree, double risk_aversion);
  /// Throws ModelError unless risk_aversion > 0 and finite.
  void validate() const;
};

struct OneStepSolution {
  double certainty_equivalent = 0.0;
  std::vector<double> holding;       // optimal shares per asset (minimum-norm)
  std::vector<double> dual_weights;  // w_i ~ p_i exp(-alpha (v_i + holding . dS_i)), normalized
  int iterations = 0;
};

/// CE = -(1/alpha) log min_h sum_i p_i exp(-alpha (v_i + h . dS_i)).
/// `increments` is the row-major (probs.size() x dim) block of asset moves.
/// Throws ArbitrageError when 0 is not in the relative interior of the
/// increment hull and ContractViolation on non-finite input.
OneStepSolution one_step_ce(std::span<const double> probs, std::span<const double> increments, std::size_t dim,
                            std::span<const double> values, double alpha);

/// Value-only variant of one_step_ce; allocation-free for dim <= 1.
double one_step_certainty_equivalent(std::span<const double> probs, std::span<const double> increments,
                                     std::size_t dim, std::span<const double> values, double alpha);

/// Endowment-tilted transition law P_C with dP_C/dP ~ exp(-alpha C).
struct TiltedTree {
  EventTree base;
  double alpha;
  std::vector<double> tilted_prob;     // per edge
  std::vector<double> log_normalizer;  // per node: log E_t[exp(-alpha C)]

  std::span<const double> probs(NodeId v) const;
  double normalizer(NodeId v) const;
};

TiltedTree tilt_measure(const EventTree& tree, const TerminalClaim& C, double alpha);

/// Equivalent martingale measure given by per-edge transition weights.
struct MartingaleMeasure {
  EventTree tree;
  std::vector<double> transition_prob;  // per edge
  std::vector<double> lambda;           // per node x dim; tilt parameter of each one-step projection
  std::vector<double> entropy_to_go;    // per node: relative entropy of the remaining steps
  std::vector<double> density_to_base;  // per terminal rank; empty on recombining lattices
  double relative_entropy = 0.0;        // nats, relative to the base law it was built against

  std::span<const double> probs(NodeId v) const;
};

/// Entropy minimizing martingale measure relative to the tree's own law.
MartingaleMeasure emmm(const EventTree& tree);
/// Entropy minimizing martingale measure relative to P_C.
MartingaleMeasure emmm(const TiltedTree& tilted);
/// Entropy minimizing martingale measure relative to an arbitrary per-edge base law.
MartingaleMeasure emmm(const EventTree& tree, std::span<const double> base_edge_probs);

/// Exponential tilt q_i ~ r_i exp(lambda . dS_i) with sum_i q_i dS_i = 0.
/// Returns q; writes lambda when requested. Throws ArbitrageError when no such tilt exists.
std::vector<double> martingale_projection(std::span<const double> weights, std::span<const double> increments,
                                          std::size_t dim, std::vector<double>* lambda = nullptr);

/// Assembles a measure from per-edge weights. Checks normalization and the
/// martingale condition (1e-10) per node and fills densities and entropy
/// relative to `base_edge_probs`.
MartingaleMeasure make_measure(const EventTree& tree, std::vector<double> transition_prob,
                               std::span<const double> base_edge_probs);

/// KL(Q || base) computed by a forward pass over reach probabilities.
double relative_entropy(const EventTree& tree, std::span<const double> q_edge_probs,
                        std::span<const double> base_edge_probs);

/// Largest |sum_i q_i dS_i| over nodes and assets.
double martingale_defect(const EventTree& tree, std::span<const double> q_edge_probs);

/// Random equivalent martingale measure: each node's `center` weights are
/// multiplied by exp(scale * N(0,1)) and re-projected onto the martingale constraint.
MartingaleMeasure sample_martingale_measure(const EventTree& tree, std::span<const double> center_edge_probs,
                                            std::span<const double> base_edge_probs, std::mt19937_64& rng,
                                            double scale);

/// Dimension of the set of one-step martingale measures at v.
std::size_t martingale_freedom(const EventTree& tree, NodeId v);

/// Unique martingale measure of a complete tree. Throws ModelError if some
/// node admits zero or several one-step martingale measures.
MartingaleMeasure complete_market_measure(const EventTree& tree);
bool is_complete(const EventTree& tree);

/// sup over strategies of E[-exp(-alpha (C + claim + gains))] under the tree's law.
double utility_indirect(const EventTree& tree, const Agent& agent, const TerminalClaim& claim);
/// Certainty equivalent of the same problem: utility = -exp(-alpha * ce).
double indirect_certainty_equivalent(const EventTree& tree, const Agent& agent, const TerminalClaim& claim);

/// CSV dump of the EMMM projection per node: node,time,lambda_j...,theta_j...,w_i...
/// where theta = -lambda is the pure-investment hedge and w the transition weights.
void write_measure_diagnostics(std::ostream& os, const MartingaleMeasure& measure);

}  // namespace gccsolver
