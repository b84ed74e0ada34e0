#pragma once

// Dynamic exponential indifference valuation pi_t(H) by backward recursion
// under the entropy minimizing martingale measure of the endowment-tilted law.

#include <iosfwd>
#include <span>
#include <vector>

#include "gccsolver/exputil.hpp"
#include "gccsolver/lattice.hpp"

namespace gccsolver {

/// Valuation operator of one agent on one tree. Immutable after construction;
/// safe to share between threads.
class Valuer {
 public:
  Valuer(EventTree tree, Agent agent);

  const EventTree& tree() const noexcept { return tree_; }
  const Agent& agent() const noexcept { return agent_; }
  double alpha() const noexcept { return agent_.risk_aversion; }
  const TiltedTree& tilted() const noexcept { return tilted_; }
  /// Q^{E,C}: entropy minimizing martingale measure relative to the tilted law.
  const MartingaleMeasure& pricing_measure() const noexcept { return measure_; }

  /// One backward step at non-terminal v given the values at its children.
  double one_step(NodeId v, std::span<const double> child_values) const;
  OneStepSolution one_step_solution(NodeId v, std::span<const double> child_values) const;

 private:
  EventTree tree_;
  Agent agent_;
  TiltedTree tilted_;
  MartingaleMeasure measure_;
};

/// pi_t(H) at every node.
AdaptedProcess european_value_process(const Valuer& valuer, const TerminalClaim& H);

/// pi_0(H).
double value_at(const Valuer& valuer, const TerminalClaim& H);

/// Value process of "receive L at the first marked node at or after t".
/// Works on recombining lattices since it needs no path information.
AdaptedProcess stopped_value_process(const Valuer& valuer, const AdaptedProcess& L, const StoppingRule& rule);

/// pi_0(L stopped by rule).
double value_at(const Valuer& valuer, const AdaptedProcess& L, const StoppingRule& rule);

/// E^Q_t[H] at every node.
AdaptedProcess expectation_process(const MartingaleMeasure& Q, const TerminalClaim& H);

/// E^Q[H] + (H(Q|P_C) - H(Q^{E,C}|P_C)) / alpha - pi_0(H). Nonnegative for every
/// equivalent martingale measure Q on the valuer's tree.
double dual_gap(const Valuer& valuer, const TerminalClaim& H, const MartingaleMeasure& Q);

/// Measure attaining the dual infimum for H: per node, the dual weights of the
/// one-step problem solved during valuation.
MartingaleMeasure optimal_dual_measure(const Valuer& valuer, const TerminalClaim& H);

/// Max over nodes of |pi^{alpha,C}_t(H) - (pi^{alpha,0}_t(C + H) - pi^{alpha,0}_t(C))|.
double endowment_identity_check(const EventTree& tree, double alpha, const TerminalClaim& C,
                                const TerminalClaim& H);

/// ce_t(C + H) - ce_t(C) with both certainty equivalents from utility
/// maximization under P (no measure change). Independent of Valuer.
AdaptedProcess primal_value_process(const EventTree& tree, const Agent& agent, const TerminalClaim& H);

/// CSV with header node,time,value.
void write_value_csv(std::ostream& os, const AdaptedProcess& values);

}  // namespace gccsolver
