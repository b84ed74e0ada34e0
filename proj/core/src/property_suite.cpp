#include "gccsolver/property_suite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

#include "gccsolver/dynkin.hpp"
#include "gccsolver/errors.hpp"
#include "gccsolver/random_models.hpp"

namespace gccsolver {

ValuationFn default_valuation() {
  return [](const Valuer& valuer, const TerminalClaim& H) { return european_value_process(valuer, H); };
}

ValuationFn biased_valuation(double bias) {
  return [bias](const Valuer& valuer, const TerminalClaim& H) {
    const auto v = european_value_process(valuer, H);
    std::vector<double> shifted(v.values().begin(), v.values().end());
    for (double& x : shifted) x += bias;
    return AdaptedProcess(valuer.tree(), std::move(shifted));
  };
}

bool SuiteReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass(); });
}

bool SuiteReport::group_ok(const std::string& group) const {
  bool any = false;
  for (const auto& c : checks) {
    if (c.group != group) continue;
    any = true;
    if (!c.pass()) return false;
  }
  return any;
}

const PropertyCheck& SuiteReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ContractViolation("no property check named " + name);
}

namespace {

class Recorder {
 public:
  void record(const std::string& group, const std::string& name, double residual, double tol) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, checks_.size()).first;
      checks_.push_back(PropertyCheck{group, name, tol, 0.0, 0, 0});
    }
    auto& c = checks_[it->second];
    ++c.cases;
    if (std::isnan(residual) || residual > tol) ++c.failures;
    if (std::isnan(residual) || residual > c.worst) c.worst = residual;
  }
  // a thrown exception counts as a failed case
  template <class F>
  void guarded(const std::string& group, const std::string& name, double tol, F&& f) {
    try {
      record(group, name, f(), tol);
    } catch (const std::exception&) {
      record(group, name, std::numeric_limits<double>::infinity(), tol);
    }
  }
  std::vector<PropertyCheck> take() { return std::move(checks_); }

 private:
  std::vector<PropertyCheck> checks_;
  std::map<std::string, std::size_t> index_;
};

double max_abs_diff_at(std::span<const NodeId> nodes, const AdaptedProcess& a, const AdaptedProcess& b,
                       const std::function<double(NodeId)>& offset) {
  double worst = 0.0;
  for (NodeId v : nodes) worst = std::max(worst, std::abs(a[v] - b[v] - offset(v)));
  return worst;
}

// Claim equal to x at the time-t ancestor of each terminal.
TerminalClaim lift_from_level(const EventTree& tree, int t, const AdaptedProcess& x) {
  return TerminalClaim::from_function(tree, [&](NodeId leaf) { return x[tree.path_to(leaf)[t]]; });
}

constexpr double kTol = 1e-9;

void valuation_checks(Recorder& rec, std::mt19937_64& rng, const Valuer& valuer, const ValuationFn& pi) {
  const EventTree& tree = valuer.tree();
  const std::string g = "valuation";
  const auto H1 = random_claim(tree, rng);
  const auto p1 = pi(valuer, H1);
  const NodeId root = tree.root();

  rec.guarded(g, "boundedness", kTol, [&] {
    double worst = 0.0;
    for (double v : p1.values()) worst = std::max(worst, std::abs(v) - H1.sup_abs());
    return std::max(worst, 0.0);
  });

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> pick_leaf(0, tree.terminals().size() - 1);
  const std::size_t bumped = pick_leaf(rng);
  std::vector<double> raised(H1.values().begin(), H1.values().end());
  for (std::size_t i = 0; i < raised.size(); ++i) raised[i] += i == bumped ? 0.5 : (coin(rng) ? unit(rng) : 0.0);
  const TerminalClaim H2(tree, std::move(raised));
  const auto p2 = pi(valuer, H2);
  rec.guarded(g, "monotonicity", kTol, [&] {
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) worst = std::max(worst, p1[v] - p2[v]);
    return worst;
  });
  // H1 <= H2 with H1 != H2 on a set of positive probability forces a strict increase at the root
  rec.guarded(g, "strict root monotonicity", 0.0, [&] { return p2[root] > p1[root] ? 0.0 : 1.0 + p1[root] - p2[root]; });

  const int t = std::uniform_int_distribution<int>(0, tree.steps() - 1)(rng);
  const auto level = tree.level(t);
  const auto x = random_process(tree, rng);
  const auto gains = trading_gains(random_strategy(tree, rng), t);
  const auto x_lifted = lift_from_level(tree, t, x);
  rec.guarded(g, "replication invariance", kTol, [&] {
    const auto shifted = pi(valuer, H1 + x_lifted + gains);
    return max_abs_diff_at(level, shifted, p1, [&](NodeId v) { return x[v]; });
  });
  rec.guarded(g, "replication cost preservation", kTol, [&] {
    const auto replicated = pi(valuer, x_lifted + gains);
    double worst = 0.0;
    for (NodeId v : level) worst = std::max(worst, std::abs(replicated[v] - x[v]));
    return worst;
  });

  rec.guarded(g, "local property", kTol, [&] {
    std::vector<std::uint8_t> in_lambda(tree.size(), 0);
    for (NodeId v : level) in_lambda[v] = coin(rng);
    const auto mixed = TerminalClaim::from_function(
        tree, [&](NodeId leaf) { return in_lambda[tree.path_to(leaf)[t]] ? H1.at(leaf) : H2.at(leaf); });
    const auto pm = pi(valuer, mixed);
    double worst = 0.0;
    for (NodeId v : level) worst = std::max(worst, std::abs(pm[v] - (in_lambda[v] ? p1[v] : p2[v])));
    return worst;
  });

  rec.guarded(g, "time consistency", kTol, [&] {
    const auto sigma = random_rule(tree, rng);
    const auto profile = stop_profile(sigma);
    const auto pl = pi(valuer, stopped_value(p1, sigma));
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) {
      if (profile.status[v] != StopStatus::kStoppedBefore) worst = std::max(worst, std::abs(pl[v] - p1[v]));
    }
    return worst;
  });

  rec.guarded(g, "sup-norm continuity", 1e-12, [&] {
    const double eps = 1e-3;
    const auto G = random_claim(tree, rng, -1.0, 1.0);
    const auto pg = pi(valuer, H1 + G * eps);
    return std::max(0.0, std::abs(pg[root] - p1[root]) - eps * G.sup_abs());
  });
}

void duality_checks(Recorder& rec, std::mt19937_64& rng, const Valuer& valuer, const ValuationFn& pi,
                    int samples) {
  const EventTree& tree = valuer.tree();
  const std::string g = "duality";
  const double alpha = valuer.alpha();
  const auto& base = valuer.tilted().tilted_prob;
  const auto& qe = valuer.pricing_measure();
  const double he = relative_entropy(tree, qe.transition_prob, base);
  const auto H = random_claim(tree, rng);
  const NodeId root = tree.root();
  const double p0 = pi(valuer, H)[root];

  auto gap = [&](const MartingaleMeasure& Q, const TerminalClaim& claim, double value) {
    const double hq = relative_entropy(tree, Q.transition_prob, base);
    return expectation_process(Q, claim)[root] + (hq - he) / alpha - value;
  };

  double min_gap = std::numeric_limits<double>::infinity();
  double entropy_shortfall = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double scale = 0.05 + 1.5 * (k % 10) / 10.0;
    const auto Q = sample_martingale_measure(tree, qe.transition_prob, base, rng, scale);
    min_gap = std::min(min_gap, gap(Q, H, p0));
    entropy_shortfall = std::max(entropy_shortfall, he - relative_entropy(tree, Q.transition_prob, base));
  }
  rec.record(g, "dual gap nonnegative", samples > 0 ? std::max(0.0, -min_gap) : 0.0, 1e-8);
  rec.record(g, "emmm entropy minimal", entropy_shortfall, 1e-12);

  rec.guarded(g, "dual gap zero at pricing measure", 1e-8, [&] {
    const auto zero = TerminalClaim::constant(tree, 0.0);
    return std::abs(gap(qe, zero, pi(valuer, zero)[root]));
  });
  rec.guarded(g, "dual gap zero at optimal measure", 1e-8,
              [&] { return std::abs(gap(optimal_dual_measure(valuer, H), H, p0)); });

  rec.guarded(g, "emmm duality identity", kTol, [&] {
    double worst = 0.0;
    std::vector<double> kids;
    for (NodeId v = 0; v < tree.size(); ++v) {
      if (tree.is_terminal(v)) continue;
      const auto ch = tree.children(v);
      kids.resize(ch.size());
      for (std::size_t i = 0; i < ch.size(); ++i) kids[i] = qe.entropy_to_go[ch[i]];
      const auto sol = one_step_ce(valuer.tilted().probs(v), tree.increments(v), tree.dim(), kids, 1.0);
      worst = std::max(worst, std::abs(sol.certainty_equivalent - qe.entropy_to_go[v]));
      const auto q = qe.probs(v);
      for (std::size_t i = 0; i < ch.size(); ++i) worst = std::max(worst, std::abs(sol.dual_weights[i] - q[i]));
    }
    return worst;
  });

  rec.guarded(g, "endowment identity", 0.0, [&] {
    const double bound = 1e-9 * (1.0 + H.sup_abs() + valuer.agent().endowment.sup_abs());
    return std::max(0.0, endowment_identity_check(tree, alpha, valuer.agent().endowment, H) - bound);
  });
  rec.guarded(g, "primal two-problem cross-check", kTol, [&] {
    const auto primal = primal_value_process(tree, valuer.agent(), H);
    const auto dual = pi(valuer, H);
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) worst = std::max(worst, std::abs(primal[v] - dual[v]));
    return worst;
  });
}

void snell_checks(Recorder& rec, std::mt19937_64& rng, const Valuer& valuer, int random_rules, std::size_t cap,
                  bool enumerable) {
  const EventTree& tree = valuer.tree();
  const std::string g = "snell";
  const auto L = random_process(tree, rng);
  const auto S = snell_envelope(valuer, L);

  rec.guarded(g, "envelope recursion", 1e-12, [&] { return recursion_residual(valuer, L, S); });
  rec.guarded(g, "envelope dominates payoff", 0.0, [&] {
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) {
      worst = std::max(worst, L[v] - S.envelope[v]);
      if (tree.is_terminal(v)) worst = std::max(worst, std::abs(L[v] - S.envelope[v]));
    }
    return worst;
  });
  rec.guarded(g, "hitting rule attains root value", kTol,
              [&] { return std::abs(value_at(valuer, L, S.optimal_rule) - S.root_value); });
  if (enumerable) {
    rec.guarded(g, "root equals exhaustive optimum", kTol, [&] {
      double best = -std::numeric_limits<double>::infinity();
      for_each_stopping_rule(tree, [&](const StoppingRule& r) { best = std::max(best, value_at(valuer, L, r)); }, cap);
      return std::abs(best - S.root_value);
    });
  }
  rec.guarded(g, "supermartingale under random rules", kTol, [&] {
    std::vector<StoppingRule> rules;
    for (int k = 0; k < random_rules; ++k) rules.push_back(random_rule(tree, rng, 0.1 + 0.8 * (k % 5) / 4.0));
    return std::max(0.0, check_supermartingale(valuer, S, rules));
  });
  rec.guarded(g, "monotone in payoff", 0.0, [&] {
    std::uniform_real_distribution<double> bump(0.0, 1.0);
    const auto L2 = AdaptedProcess::from_function(tree, [&](NodeId v) { return L[v] + bump(rng); });
    const auto S2 = snell_envelope(valuer, L2);
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) worst = std::max(worst, S.envelope[v] - S2.envelope[v]);
    return worst;
  });
  const auto ratio = ratio_representation(valuer, L);
  rec.record(g, "ratio representation matches envelope", [&] {
    double worst = 0.0;
    for (NodeId v = 0; v < tree.size(); ++v) worst = std::max(worst, std::abs(ratio.ratio[v] - S.envelope[v]));
    return worst;
  }(), kTol);
  rec.record(g, "ratio parts are P-supermartingales", ratio.supermartingale_violation, 1e-10);
}

void iteration_checks(Recorder& rec, std::mt19937_64& rng, const EventTree& tree, std::size_t cap, bool enumerable) {
  const std::string g = "iteration";
  const auto X = random_process(tree, rng);
  std::uniform_real_distribution<double> band(0.0, 1.0);
  const auto Y = AdaptedProcess::from_function(tree, [&](NodeId v) { return X[v] + band(rng); });
  const Agent buyer{random_risk_aversion(rng), random_claim(tree, rng)};
  const Agent seller{random_risk_aversion(rng), random_claim(tree, rng)};
  const GccGame game(GccSpec{X, Y, buyer, seller});
  for (Player first : {Player::kBuyer, Player::kSeller}) {
    std::optional<NashResult> run;
    try {
      run = nash_iterate(game, first);
    } catch (const std::exception&) {
      rec.record(g, "iteration converges within cap", std::numeric_limits<double>::infinity(), 0.0);
      continue;
    }
    const NashResult& result = *run;
    rec.record(g, "iteration converges within cap",
               result.converged && result.trace.size() <= result.theoretical_cap ? 0.0 : 1.0, 0.0);
    const auto invariants = check_trace_invariants(result);
    rec.record(g, "rules monotone along iteration", static_cast<double>(invariants.monotonicity_violations), 0.0);
    rec.record(g, "simultaneous stops only after maturity runs", static_cast<double>(invariants.tie_violations), 0.0);
    rec.record(g, "early stop implies earlier first hit", static_cast<double>(invariants.inclusion_violations), 0.0);
    rec.guarded(g, "equilibrium passes Snell verification", kTol, [&] {
      const auto rep = verify_nep_snell(game, result.buyer_rule, result.seller_rule);
      return std::max({rep.buyer_gap, rep.seller_gap, 0.0});
    });
    if (enumerable) {
      rec.guarded(g, "responses are exhaustive best responses", kTol, [&] {
        const auto audit = audit_best_responses(game, result, cap);
        return std::max({audit.max_buyer_gain, audit.max_seller_gain, 0.0});
      });
      rec.guarded(g, "equilibrium passes exhaustive verification", kTol, [&] {
        const auto rep = verify_nep_exhaustive(game, result.buyer_rule, result.seller_rule, kTol, cap);
        return std::max({rep.buyer_gap, rep.seller_gap, 0.0});
      });
    }
  }
}

void complete_checks(Recorder& rec, std::mt19937_64& rng, int steps, const ValuationFn& pi) {
  const std::string g = "complete";
  const auto tree = random_complete_tree(rng, steps);
  const auto H = random_claim(tree, rng);
  const auto Q = complete_market_measure(tree);
  const auto linear = expectation_process(Q, H);
  const double alpha = random_risk_aversion(rng);
  const auto C = random_claim(tree, rng);
  double worst_linear = 0.0, worst_invariance = 0.0;
  const auto reference = pi(Valuer(tree, Agent{alpha, C}), H);
  const std::array<Agent, 3> variants{Agent{2.0 * alpha, C}, Agent{0.5 * alpha, C + 1.7},
                                      Agent{alpha, random_claim(tree, rng)}};
  for (NodeId v = 0; v < tree.size(); ++v) worst_linear = std::max(worst_linear, std::abs(reference[v] - linear[v]));
  for (const auto& agent : variants) {
    const auto other = pi(Valuer(tree, agent), H);
    for (NodeId v = 0; v < tree.size(); ++v) worst_invariance = std::max(worst_invariance, std::abs(other[v] - reference[v]));
  }
  rec.record(g, "value equals risk-neutral expectation", worst_linear, 1e-10);
  rec.record(g, "value invariant in risk aversion and endowment", worst_invariance, 1e-10);

  const auto X = random_process(tree, rng);
  std::uniform_real_distribution<double> band(0.0, 1.0);
  const auto Y = AdaptedProcess::from_function(tree, [&](NodeId v) { return X[v] + band(rng); });
  const GccSpec spec{X, Y, Agent{random_risk_aversion(rng), random_claim(tree, rng)},
                     Agent{random_risk_aversion(rng), random_claim(tree, rng)}};
  for (Player first : {Player::kBuyer, Player::kSeller}) {
    rec.guarded(g, "equilibrium value equals zero-sum game value", kTol, [&] {
      const auto rep = complete_market_crosscheck(spec, first);
      return rep.value_error;
    });
    rec.guarded(g, "equilibrium invariant in risk aversion and endowment", kTol, [&] {
      const auto rep = complete_market_crosscheck(spec, first);
      return rep.rules_invariant ? rep.invariance_error : std::numeric_limits<double>::infinity();
    });
    rec.guarded(g, "buyer value is minus seller value", kTol, [&] {
      const auto r = nash_iterate(GccGame(spec), first);
      return std::abs(r.j_buyer + r.j_seller);
    });
  }
}

}  // namespace

SuiteReport run_property_suite(const SuiteOptions& options) {
  Recorder rec;
  SuiteReport report;
  const ValuationFn pi = options.valuation ? options.valuation : default_valuation();
  for (int i = 0; i < options.trees; ++i) {
    auto rng = instance_rng(options.seed, static_cast<std::uint64_t>(i));
    const int steps = std::uniform_int_distribution<int>(1, options.max_steps)(rng);
    const auto tree = random_incomplete_tree(rng, steps);
    const Valuer valuer(tree, Agent{random_risk_aversion(rng), random_claim(tree, rng)});
    const bool enumerable = tree.non_terminal_count() <= options.enumeration_cap;
    ++report.incomplete_trees;
    if (enumerable) ++report.enumerable_trees;
    valuation_checks(rec, rng, valuer, pi);
    duality_checks(rec, rng, valuer, pi, options.dual_samples);
    snell_checks(rec, rng, valuer, options.random_rules, options.enumeration_cap, enumerable);
    iteration_checks(rec, rng, tree, options.enumeration_cap, enumerable);
  }
  for (int j = 0; j < options.complete_trees; ++j) {
    auto rng = instance_rng(options.seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(j));
    const int steps = std::uniform_int_distribution<int>(1, options.max_complete_steps)(rng);
    complete_checks(rec, rng, steps, pi);
    ++report.complete_trees;
  }
  report.checks = rec.take();
  return report;
}

void print_suite_report(std::ostream& os, const SuiteReport& report) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  for (const auto& c : report.checks) {
    os << (c.pass() ? "PASS " : "FAIL ") << std::left << std::setw(11) << c.group << std::setw(54) << c.name
       << " cases=" << std::setw(5) << c.cases << " worst=" << std::scientific << std::setprecision(3) << c.worst
       << " tol=" << c.tolerance << '\n';
    os.flags(flags);
    os.precision(precision);
  }
}

}  // namespace gccsolver
