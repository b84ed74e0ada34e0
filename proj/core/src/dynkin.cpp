#include "gccsolver/dynkin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "gccsolver/errors.hpp"

namespace gccsolver {

void GccSpec::validate() const {
  const EventTree& t = X.tree();
  require_same_tree(t, Y.tree(), "GccSpec");
  require_same_tree(t, buyer.endowment.tree(), "GccSpec");
  require_same_tree(t, seller.endowment.tree(), "GccSpec");
  for (NodeId v = 0; v < t.size(); ++v) {
    if (X[v] > Y[v]) {
      throw ContractViolation("GccSpec: exercise payoff exceeds recall payoff at node " + std::to_string(v));
    }
  }
}

namespace {

const GccSpec& validated(const GccSpec& spec) {
  spec.validate();
  return spec;
}

}  // namespace

GccGame::GccGame(GccSpec spec)
    : spec_(std::move(spec)),
      buyer_(validated(spec_).tree(), spec_.buyer),
      seller_(spec_.tree(), spec_.seller) {}

const char* to_string(Player p) { return p == Player::kBuyer ? "buyer" : "seller"; }

AdaptedProcess buyer_auxiliary_payoff(const GccSpec& spec, const StoppingRule& sigma) {
  require_same_tree(spec.tree(), sigma.tree(), "buyer_auxiliary_payoff");
  const EventTree& tree = spec.tree();
  const auto profile = stop_profile(sigma, spec.Y);
  std::vector<double> L(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) {
    switch (profile.status[v]) {
      case StopStatus::kLive:
        L[v] = spec.X[v];
        break;
      case StopStatus::kStopsHere:
        L[v] = tree.is_terminal(v) ? spec.X[v] : spec.Y[v];
        break;
      case StopStatus::kStoppedBefore:
        L[v] = profile.frozen[v];
        break;
    }
  }
  return AdaptedProcess(tree, std::move(L));
}

AdaptedProcess seller_auxiliary_payoff(const GccSpec& spec, const StoppingRule& tau) {
  require_same_tree(spec.tree(), tau.tree(), "seller_auxiliary_payoff");
  const EventTree& tree = spec.tree();
  const auto profile = stop_profile(tau, spec.X);
  std::vector<double> L(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) {
    L[v] = profile.status[v] == StopStatus::kLive ? -spec.Y[v] : -profile.frozen[v];
  }
  return AdaptedProcess(tree, std::move(L));
}

namespace {

// First hit capped at the counter-party stop; after the counter-party has
// stopped the previous own rule takes over (at the counter-party's stop node
// itself the responder waits, which yields the recall side of R).
BestResponse assemble_response(const Valuer& valuer, AdaptedProcess L, const StoppingRule& counter,
                               const StoppingRule& prev) {
  const EventTree& tree = valuer.tree();
  require_same_tree(tree, prev.tree(), "best response");
  SnellResult snell = snell_envelope(valuer, L);
  const auto counter_profile = stop_profile(counter);
  std::vector<std::uint8_t> tilde(tree.size()), marks(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) {
    const StopStatus s = counter_profile.status[v];
    const bool hit = snell.optimal_rule.marked(v);
    tilde[v] = hit || s != StopStatus::kLive;
    if (s == StopStatus::kLive) {
      marks[v] = hit;
    } else if (s == StopStatus::kStoppedBefore) {
      marks[v] = prev.marked(v);
    } else {
      marks[v] = tree.is_terminal(v);
    }
  }
  StoppingRule tilde_rule(tree, std::move(tilde));
  StoppingRule rule(tree, std::move(marks));
  return BestResponse{std::move(L), std::move(snell), std::move(tilde_rule), std::move(rule)};
}

}  // namespace

BestResponse buyer_response(const GccGame& game, const StoppingRule& sigma, const StoppingRule& prev_buyer) {
  return assemble_response(game.buyer(), buyer_auxiliary_payoff(game.spec(), sigma), sigma, prev_buyer);
}

BestResponse seller_response(const GccGame& game, const StoppingRule& tau, const StoppingRule& prev_seller) {
  return assemble_response(game.seller(), seller_auxiliary_payoff(game.spec(), tau), tau, prev_seller);
}

AdaptedProcess game_value_process(const Valuer& valuer, const GccSpec& spec, const StoppingRule& tau,
                                  const StoppingRule& sigma, double sign) {
  const EventTree& tree = valuer.tree();
  require_same_tree(tree, spec.tree(), "game_value_process");
  require_same_tree(tree, tau.tree(), "game_value_process");
  require_same_tree(tree, sigma.tree(), "game_value_process");
  std::vector<double> w(tree.size());
  std::vector<double> kids;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tau.marked(v)) {
      w[v] = sign * spec.X[v];
    } else if (sigma.marked(v)) {
      w[v] = sign * spec.Y[v];
    } else {
      const auto ch = tree.children(v);
      kids.resize(ch.size());
      for (std::size_t i = 0; i < ch.size(); ++i) kids[i] = w[ch[i]];
      w[v] = valuer.one_step(v, kids);
    }
  }
  return AdaptedProcess(tree, std::move(w));
}

GameValues game_values(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma) {
  const NodeId root = game.tree().root();
  return GameValues{game_value_process(game.buyer(), game.spec(), tau, sigma, 1.0)[root],
                    game_value_process(game.seller(), game.spec(), tau, sigma, -1.0)[root]};
}

NashResult nash_iterate(const GccGame& game, Player first_mover, int max_half_steps) {
  const EventTree& tree = game.tree();
  NashResult out{StoppingRule::at_maturity(tree), StoppingRule::at_maturity(tree), 0.0, 0.0, false, first_mover,
                 {}, {}, {}, 0};
  out.theoretical_cap = static_cast<std::size_t>(tree.steps()) * tree.size();
  const std::size_t limit =
      max_half_steps > 0 ? static_cast<std::size_t>(max_half_steps) : std::max<std::size_t>(out.theoretical_cap, 2);

  out.sequence = {out.buyer_rule, out.seller_rule};
  out.tilde_sequence = {std::nullopt, std::nullopt};
  Player mover = first_mover;
  for (std::size_t step = 1;; ++step) {
    if (step > limit) {
      throw NoConvergenceError("best-response iteration did not settle within " + std::to_string(limit) +
                               " half-steps");
    }
    const bool buyer_moves = mover == Player::kBuyer;
    StoppingRule& own = buyer_moves ? out.buyer_rule : out.seller_rule;
    const StoppingRule& other = buyer_moves ? out.seller_rule : out.buyer_rule;
    BestResponse r = buyer_moves ? buyer_response(game, other, own) : seller_response(game, other, own);

    if (!stops_no_later(r.rule, own)) {
      throw InternalError(std::string("monotonicity of the ") + to_string(mover) +
                          " rules failed at half-step " + std::to_string(step));
    }
    const bool unchanged = same_stopping_time(r.rule, own);
    own = std::move(r.rule);
    out.sequence.push_back(own);
    out.tilde_sequence.push_back(std::move(r.tilde_rule));

    const GameValues j = game_values(game, out.buyer_rule, out.seller_rule);
    out.j_buyer = j.buyer;
    out.j_seller = j.seller;
    out.trace.push_back(TraceEntry{static_cast<int>(step), mover, out.buyer_rule, out.seller_rule, j.buyer, j.seller});

    if (unchanged && step >= 2) {
      out.converged = true;
      return out;
    }
    mover = buyer_moves ? Player::kSeller : Player::kBuyer;
  }
}

NepReport verify_nep_snell(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma, double tol) {
  NepReport rep;
  rep.tolerance = tol;
  const GameValues j = game_values(game, tau, sigma);
  rep.j_buyer = j.buyer;
  rep.j_seller = j.seller;
  const auto vb = snell_envelope(game.buyer(), buyer_auxiliary_payoff(game.spec(), sigma));
  const auto va = snell_envelope(game.seller(), seller_auxiliary_payoff(game.spec(), tau));
  rep.buyer_gap = vb.root_value - j.buyer;
  rep.seller_gap = va.root_value - j.seller;
  return rep;
}

NepReport verify_nep_exhaustive(const GccGame& game, const StoppingRule& tau, const StoppingRule& sigma,
                                double tol, std::size_t cap) {
  NepReport rep;
  rep.tolerance = tol;
  const GameValues j = game_values(game, tau, sigma);
  rep.j_buyer = j.buyer;
  rep.j_seller = j.seller;
  double best_b = -std::numeric_limits<double>::infinity();
  double best_a = -std::numeric_limits<double>::infinity();
  const NodeId root = game.tree().root();
  for_each_stopping_rule(
      game.tree(),
      [&](const StoppingRule& rule) {
        const double b = game_value_process(game.buyer(), game.spec(), rule, sigma, 1.0)[root];
        if (b > best_b) {
          best_b = b;
          rep.buyer_deviation = rule;
        }
        const double a = game_value_process(game.seller(), game.spec(), tau, rule, -1.0)[root];
        if (a > best_a) {
          best_a = a;
          rep.seller_deviation = rule;
        }
      },
      cap);
  rep.buyer_gap = best_b - j.buyer;
  rep.seller_gap = best_a - j.seller;
  return rep;
}

TraceInvariantReport check_trace_invariants(const NashResult& result) {
  TraceInvariantReport rep;
  if (result.sequence.empty() || result.sequence.front().tree().recombining()) return rep;
  rep.checked = true;
  const int T = result.sequence.front().tree().steps();
  std::vector<std::vector<int>> times, tilde;
  for (const auto& r : result.sequence) times.push_back(induced_times(r));
  for (const auto& r : result.tilde_sequence) tilde.push_back(r ? induced_times(*r) : std::vector<int>{});
  const std::size_t paths = times.front().size();
  const std::size_t n_rules = times.size();
  // index k here is n - 1 in the 1-based notation tau_n
  for (std::size_t k = 0; k + 2 < n_rules; ++k) {
    for (std::size_t p = 0; p < paths; ++p) {
      if (times[k + 2][p] > times[k][p]) ++rep.monotonicity_violations;
      if (times[k][p] < times[k + 1][p] && !tilde[k + 2].empty() && tilde[k + 2][p] > times[k][p]) {
        ++rep.inclusion_violations;
      }
    }
  }
  for (std::size_t k = 0; k + 1 < n_rules; ++k) {
    for (std::size_t p = 0; p < paths; ++p) {
      if (times[k + 1][p] != times[k][p]) continue;
      for (std::size_t m = 0; m <= k; ++m) {
        if (times[m][p] != T) {
          ++rep.tie_violations;
          break;
        }
      }
    }
  }
  return rep;
}

BestResponseAudit audit_best_responses(const GccGame& game, const NashResult& result, std::size_t cap) {
  BestResponseAudit audit;
  audit.max_buyer_gain = -std::numeric_limits<double>::infinity();
  audit.max_seller_gain = -std::numeric_limits<double>::infinity();
  const auto rules = enumerate_stopping_rules(game.tree(), cap);
  const NodeId root = game.tree().root();
  // the owner of sequence[k] responded to sequence[k - 1]
  Player owner = result.first_mover;
  for (std::size_t k = 0; k < result.sequence.size(); ++k, owner = owner == Player::kBuyer ? Player::kSeller
                                                                                          : Player::kBuyer) {
    if (k < 2) continue;
    const StoppingRule& response = result.sequence[k];
    const StoppingRule& counter = result.sequence[k - 1];
    if (owner == Player::kBuyer) {
      const double got = game_value_process(game.buyer(), game.spec(), response, counter, 1.0)[root];
      for (const auto& r : rules) {
        audit.max_buyer_gain = std::max(
            audit.max_buyer_gain, game_value_process(game.buyer(), game.spec(), r, counter, 1.0)[root] - got);
      }
    } else {
      const double got = game_value_process(game.seller(), game.spec(), counter, response, -1.0)[root];
      for (const auto& r : rules) {
        audit.max_seller_gain = std::max(
            audit.max_seller_gain, game_value_process(game.seller(), game.spec(), counter, r, -1.0)[root] - got);
      }
    }
    ++audit.responses_checked;
  }
  if (!std::isfinite(audit.max_buyer_gain)) audit.max_buyer_gain = 0.0;
  if (!std::isfinite(audit.max_seller_gain)) audit.max_seller_gain = 0.0;
  return audit;
}

AdaptedProcess zero_sum_dynkin_value(const MartingaleMeasure& Q, const AdaptedProcess& X, const AdaptedProcess& Y) {
  const EventTree& tree = Q.tree;
  require_same_tree(tree, X.tree(), "zero_sum_dynkin_value");
  require_same_tree(tree, Y.tree(), "zero_sum_dynkin_value");
  std::vector<double> val(tree.size());
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      val[v] = X[v];
      continue;
    }
    const auto ch = tree.children(v);
    const auto q = Q.probs(v);
    double cont = 0.0;
    for (std::size_t i = 0; i < ch.size(); ++i) cont += q[i] * val[ch[i]];
    val[v] = std::max(X[v], std::min(Y[v], cont));
  }
  return AdaptedProcess(tree, std::move(val));
}

CompleteMarketReport complete_market_crosscheck(const GccSpec& spec, Player first_mover, int max_half_steps,
                                                double tol) {
  spec.validate();
  const EventTree& tree = spec.tree();
  if (!is_complete(tree)) throw ModelError("complete_market_crosscheck: the market is not complete");
  CompleteMarketReport rep;
  rep.tolerance = tol;
  const auto Q = complete_market_measure(tree);
  rep.zero_sum_value = zero_sum_dynkin_value(Q, spec.X, spec.Y)[tree.root()];

  const GccGame game(spec);
  const NashResult base = nash_iterate(game, first_mover, max_half_steps);
  rep.j_buyer = base.j_buyer;
  rep.j_seller = base.j_seller;
  rep.value_error = std::max(std::abs(base.j_buyer - rep.zero_sum_value), std::abs(base.j_seller + rep.zero_sum_value));

  rep.rules_invariant = true;
  const std::array<std::pair<double, double>, 2> variants{{{2.0, 1.0}, {0.5, -0.75}}};
  for (const auto& [scale, shift] : variants) {
    GccSpec other = spec;
    other.buyer = Agent{spec.buyer.risk_aversion * scale, spec.buyer.endowment + shift};
    other.seller = Agent{spec.seller.risk_aversion * scale, spec.seller.endowment + (-shift)};
    const NashResult r = nash_iterate(GccGame(std::move(other)), first_mover, max_half_steps);
    rep.rules_invariant = rep.rules_invariant && same_stopping_time(r.buyer_rule, base.buyer_rule) &&
                          same_stopping_time(r.seller_rule, base.seller_rule);
    rep.invariance_error =
        std::max({rep.invariance_error, std::abs(r.j_buyer - base.j_buyer), std::abs(r.j_seller - base.j_seller)});
  }
  return rep;
}

void write_trace_csv(std::ostream& os, const NashResult& result) {
  const auto precision = os.precision(17);
  os << "iter,player,rule_hash,j_value\n";
  for (const auto& e : result.trace) {
    const bool buyer = e.player == Player::kBuyer;
    os << e.iteration << ',' << to_string(e.player) << ','
       << (buyer ? e.buyer_rule.hash() : e.seller_rule.hash()) << ',' << (buyer ? e.j_buyer : e.j_seller) << '\n';
  }
  os.precision(precision);
}

}  // namespace gccsolver
