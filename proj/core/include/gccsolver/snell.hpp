#pragma once

// Nonlinear Snell envelope under the indifference operator.

#include <iosfwd>
#include <span>

#include "gccsolver/indifference.hpp"

namespace gccsolver {

struct SnellResult {
  AdaptedProcess envelope;
  StoppingRule optimal_rule;
  double root_value;
};

/// V_T = L_T, V_t = max(L_t, one-step pi of V_{t+1}); optimal rule = first hit of V = L.
SnellResult snell_envelope(const Valuer& valuer, const AdaptedProcess& L);
SnellResult snell_envelope(const Valuer& valuer, const AdaptedProcess& L, double hitting_tol);

/// Max over nodes t and rules of pi_t(V at the first mark at or after t) - V_t.
double check_supermartingale(const Valuer& valuer, const SnellResult& result, std::span<const StoppingRule> rules);

/// Largest |V_t - max(L_t, pi one-step of V_{t+1})|; zero by construction.
double recursion_residual(const Valuer& valuer, const AdaptedProcess& L, const SnellResult& result);

/// Envelopes of L1 and L2 agree (to 1e-12) wherever sigma has stopped.
/// Throws ContractViolation unless L1 = L2 at those nodes.
bool restriction_check(const Valuer& valuer, const AdaptedProcess& L1, const AdaptedProcess& L2,
                       const StoppingRule& sigma);

/// Primal trade-and-stop representation under P. A is the value of
/// sup over (strategy, stop) of E[-exp(-alpha (L_tau + C + gains))], B the
/// same with L = 0 and no stop; ratio = -(1/alpha) log(A/B).
struct RatioRepresentation {
  AdaptedProcess A;
  AdaptedProcess B;
  AdaptedProcess ratio;
  /// Largest relative shortfall of A_t >= E_t[A_{t+1}] (and for B) under P:
  /// max over nodes of (E_t[A_{t+1}] - A_t) / |A_t|.
  double supermartingale_violation;
};

RatioRepresentation ratio_representation(const Valuer& valuer, const AdaptedProcess& L);

/// CSV with header node,time,L,V,stop.
void write_snell_csv(std::ostream& os, const AdaptedProcess& L, const SnellResult& result);

}  // namespace gccsolver
