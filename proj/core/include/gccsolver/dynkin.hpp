#pragma once

// Game contingent claims: best responses through auxiliary payoff processes,
// the alternating best-response iteration and equilibrium verification.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gccsolver/snell.hpp"

namespace gccsolver {

/// Buyer exercises for X, seller recalls for Y >= X. The buyer is the agent
/// receiving R(tau, sigma); the seller pays it.
struct GccSpec {
  AdaptedProcess X;
  AdaptedProcess Y;
  Agent buyer;
  Agent seller;

  const EventTree& tree() const noexcept { return X.tree(); }
  /// Throws ContractViolation unless X <= Y nodewise and all inputs share one tree.
  void validate() const;
};

/// A spec together with the two valuation operators.
class GccGame {
 public:
  explicit GccGame(GccSpec spec);

  const GccSpec& spec() const noexcept { return spec_; }
  const EventTree& tree() const noexcept { return spec_.tree(); }
  const Valuer& buyer() const noexcept { return buyer_; }
  const Valuer& seller() const noexcept { return seller_; }

 private:
  GccSpec spec_;
  Valuer buyer_;
  Valuer seller_;
};

enum class Player { kBuyer, kSeller };
const char* to_string(Player p);

struct BestResponse {
  AdaptedProcess auxiliary_payoff;
  SnellResult snell;
  StoppingRule tilde_rule;  // first hit of the envelope, capped at the counter-party stop
  StoppingRule rule;        // previous own rule after the counter-party has stopped
};

/// X before sigma; from sigma on the frozen recall payoff Y_sigma (X_T if sigma = T).
AdaptedProcess buyer_auxiliary_payoff(const GccSpec& spec, const StoppingRule& sigma);
/// -Y before tau; from tau on the frozen -X_tau.
AdaptedProcess seller_auxiliary_payoff(const GccSpec& spec, const StoppingRule& tau);

BestResponse buyer_response(const GccGame& game, const StoppingRule& sigma, const StoppingRule& prev_buyer);
BestResponse seller_response(const GccGame& game, const StoppingRule& tau, const StoppingRule& prev_seller);

/// J_B = pi^B_0(R(tau, sigma)) and J_A = pi^A_0(-R(tau, sigma)); tau wins ties.
struct GameValues {
  double buyer;
  double seller;
};
GameValues game_values(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma);

/// pi_t(sign * R(tau, sigma)) on the event that neither rule has stopped before t.
/// Needs no path information, so it also works on recombining lattices.
AdaptedProcess game_value_process(const Valuer& valuer, const GccSpec& spec, const StoppingRule& tau,
                                  const StoppingRule& sigma, double sign);

struct TraceEntry {
  int iteration;  // 1-based half-step counter
  Player player;  // who responded in this half-step
  StoppingRule buyer_rule;
  StoppingRule seller_rule;
  double j_buyer;
  double j_seller;
};

struct NashResult {
  StoppingRule buyer_rule;
  StoppingRule seller_rule;
  double j_buyer = 0.0;
  double j_seller = 0.0;
  bool converged = false;
  Player first_mover = Player::kBuyer;
  std::vector<TraceEntry> trace;
  /// tau_1, tau_2, ...: tau_1 and tau_2 are the initial rules (first mover
  /// owns tau_1), tau_{n+2} responds to tau_{n+1}.
  std::vector<StoppingRule> sequence;
  /// First-hit rules of the responses, aligned with `sequence` (empty for the initial rules).
  std::vector<std::optional<StoppingRule>> tilde_sequence;
  std::size_t theoretical_cap = 0;  // steps * nodes half-steps
};

/// Alternating best responses from (T, T). Converges when a half-step leaves
/// the responding player's stopping time unchanged (after both players have
/// responded at least once). max_half_steps <= 0 means the theoretical cap.
/// Throws NoConvergenceError past the cap and InternalError if the monotone
/// ordering tau_{n+2} <= tau_n fails.
NashResult nash_iterate(const GccGame& game, Player first_mover = Player::kBuyer, int max_half_steps = 0);

struct NepReport {
  double buyer_gap = 0.0;   // best deviation value minus J_B
  double seller_gap = 0.0;  // best deviation value minus J_A
  double j_buyer = 0.0;
  double j_seller = 0.0;
  double tolerance = 1e-9;
  std::optional<StoppingRule> buyer_deviation;   // exhaustive check: best counter-rule found
  std::optional<StoppingRule> seller_deviation;
  bool is_nep() const noexcept { return buyer_gap <= tolerance && seller_gap <= tolerance; }
};

/// Snell-envelope check: each player's rule attains the root of the envelope
/// of the auxiliary payoff built from the other player's rule.
NepReport verify_nep_snell(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma,
                           double tol = 1e-9);

/// Enumerates every counter-rule for each player. Throws EnumerationCapError on large trees.
NepReport verify_nep_exhaustive(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma,
                                double tol = 1e-9, std::size_t cap = kDefaultEnumerationCap);

/// Path-event checks on an iteration sequence (full trees only; `checked` is
/// false on recombining lattices).
struct TraceInvariantReport {
  bool checked = false;
  std::size_t monotonicity_violations = 0;  // tau_{n+2} > tau_n on some path
  std::size_t tie_violations = 0;           // tau_{n+1} = tau_n but some earlier tau_m < T
  std::size_t inclusion_violations = 0;     // tau_n < tau_{n+1} but tilde tau_{n+2} > tau_n
  bool ok() const noexcept {
    return monotonicity_violations == 0 && tie_violations == 0 && inclusion_violations == 0;
  }
};
TraceInvariantReport check_trace_invariants(const NashResult& result);

/// Largest improvement any counter-rule achieves over each response of the
/// iteration (exhaustive; should be <= 0 up to rounding).
struct BestResponseAudit {
  double max_buyer_gain = 0.0;
  double max_seller_gain = 0.0;
  std::size_t responses_checked = 0;
};
BestResponseAudit audit_best_responses(const GccGame& game, const NashResult& result,
                                       std::size_t cap = kDefaultEnumerationCap);

/// Zero-sum Dynkin game value under Q: val_T = X_T, val_t = max(X_t, min(Y_t, E^Q_t[val_{t+1}])).
AdaptedProcess zero_sum_dynkin_value(const MartingaleMeasure& Q, const AdaptedProcess& X, const AdaptedProcess& Y);

struct CompleteMarketReport {
  double zero_sum_value = 0.0;
  double j_buyer = 0.0;
  double j_seller = 0.0;
  double value_error = 0.0;      // max(|J_B - val_0|, |J_A + val_0|)
  bool rules_invariant = false;  // same equilibrium rules after rescaling alpha and shifting C
  double invariance_error = 0.0; // largest value change across the reruns
  double tolerance = 1e-9;
  bool ok() const noexcept { return rules_invariant && value_error <= tolerance && invariance_error <= tolerance; }
};

/// Throws ModelError unless the tree is complete.
CompleteMarketReport complete_market_crosscheck(const GccSpec& spec, Player first_mover = Player::kBuyer,
                                                int max_half_steps = 0, double tol = 1e-9);

/// CSV with header iter,player,rule_hash,j_value (j of the responding player).
void write_trace_csv(std::ostream& os, const NashResult& result);

}  // namespace gccsolver
