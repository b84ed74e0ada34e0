#include "gccsolver_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "gccsolver/errors.hpp"
#include "gccsolver/model_io.hpp"
#include "gccsolver/property_suite.hpp"
#include "gccsolver_cli/scenarios.hpp"

namespace gccsolver::cli {

namespace {

std::ofstream open_output(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.out);
  const auto path = c.out / file;
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

void dump_measure(const RunConfig& c, const Valuer& valuer) {
  if (!c.dump_diagnostics) return;
  auto os = open_output(c, "measure.txt");
  write_measure_diagnostics(os, valuer.pricing_measure());
}

const MartingaleMeasure require_complete(const EventTree& tree) {
  if (!is_complete(tree)) throw ModelError("the risk-neutral oracle needs a complete market");
  return complete_market_measure(tree);
}

double max_abs_diff(const AdaptedProcess& a, const AdaptedProcess& b) {
  double worst = 0.0;
  for (NodeId v = 0; v < a.tree().size(); ++v) worst = std::max(worst, std::abs(a[v] - b[v]));
  return worst;
}

// Prints -0 as 0.
double z(double x) { return x == 0.0 ? 0.0 : x; }

void print_nep(std::ostream& out, const char* label, const NepReport& r) {
  out << label << "_buyer_gap " << z(r.buyer_gap) << '\n'
      << label << "_seller_gap " << z(r.seller_gap) << '\n'
      << label << "_is_nep " << (r.is_nep() ? "true" : "false") << '\n';
}

}  // namespace

int cmd_price(const RunConfig& c, std::ostream& out) {
  const Problem p = build_problem(c);
  if (c.describe) {
    out << p.description << "claim H = " << p.claim << "\n";
    return kExitOk;
  }
  const Valuer valuer(p.tree, p.buyer());
  const TerminalClaim H = p.terminal(p.claim);
  const AdaptedProcess V = european_value_process(valuer, H);
  {
    auto os = open_output(c, "value.csv");
    write_value_csv(os, V);
  }
  dump_measure(c, valuer);
  out << "root_value " << z(V[p.tree.root()]) << '\n';
  if (c.oracle == "riskneutral") {
    const AdaptedProcess E = expectation_process(require_complete(p.tree), H);
    const double err = max_abs_diff(V, E);
    out << "oracle_value " << z(E[p.tree.root()]) << '\n' << "oracle_max_error " << err << '\n';
    if (err > c.tol) return kExitVerification;
  }
  return kExitOk;
}

int cmd_american(const RunConfig& c, std::ostream& out) {
  const Problem p = build_problem(c);
  if (c.describe) {
    out << p.description << "payoff L = " << p.payoff << "\n";
    return kExitOk;
  }
  const Valuer valuer(p.tree, p.buyer());
  const AdaptedProcess L = p.process(p.payoff);
  const SnellResult r = snell_envelope(valuer, L);
  {
    auto os = open_output(c, "snell.csv");
    write_snell_csv(os, L, r);
  }
  dump_measure(c, valuer);
  out << "root_value " << z(r.root_value) << '\n'
      << "stops_at_root " << (r.optimal_rule.marked(p.tree.root()) ? "true" : "false") << '\n';
  if (c.oracle == "riskneutral") {
    // Classical Snell envelope: the zero-sum game with a recall payoff that never binds.
    const AdaptedProcess ceiling = AdaptedProcess::constant(p.tree, L.max() + 1.0);
    const AdaptedProcess classical = zero_sum_dynkin_value(require_complete(p.tree), L, ceiling);
    const double err = max_abs_diff(r.envelope, classical);
    const bool same_rule = same_stopping_time(r.optimal_rule, hitting_rule(classical, L));
    out << "oracle_value " << z(classical[p.tree.root()]) << '\n'
        << "oracle_max_error " << err << '\n'
        << "oracle_same_exercise " << (same_rule ? "true" : "false") << '\n';
    if (err > c.tol || !same_rule) return kExitVerification;
  }
  return kExitOk;
}

int cmd_nash(const RunConfig& c, std::ostream& out) {
  const Problem p = build_problem(c);
  if (c.describe) {
    out << p.description << "X = " << p.x << ", Y = " << p.y << ", first mover " << to_string(c.first_mover)
        << "\n";
    return kExitOk;
  }
  const GccGame game(p.gcc());
  const NashResult result = nash_iterate(game, c.first_mover, c.max_iter);
  const NepReport report = verify_nep_snell(game, result.buyer_rule, result.seller_rule, c.tol);
  {
    auto os = open_output(c, "trace.csv");
    write_trace_csv(os, result);
  }
  {
    auto os = open_output(c, "equilibrium.json");
    write_equilibrium_report(os, result, report);
  }
  {
    auto os = open_output(c, "rules.json");
    write_rules(os, result.buyer_rule, result.seller_rule);
  }
  const NodeId root = p.tree.root();
  out << "converged " << (result.converged ? "true" : "false") << '\n'
      << "half_steps " << result.trace.size() << '\n'
      << "buyer_stops_at_root " << (result.buyer_rule.marked(root) ? "true" : "false") << '\n'
      << "seller_stops_at_root " << (result.seller_rule.marked(root) ? "true" : "false") << '\n'
      << "buyer_stop_nodes " << result.buyer_rule.first_stop_nodes().size() << '\n'
      << "seller_stop_nodes " << result.seller_rule.first_stop_nodes().size() << '\n'
      << "j_buyer " << z(result.j_buyer) << '\n'
      << "j_seller " << z(result.j_seller) << '\n';
  print_nep(out, "snell", report);
  int code = result.converged && report.is_nep() ? kExitOk : kExitVerification;
  if (c.oracle == "riskneutral") {
    const CompleteMarketReport cm = complete_market_crosscheck(game.spec(), c.first_mover, c.max_iter, c.tol);
    out << "oracle_zero_sum_value " << z(cm.zero_sum_value) << '\n'
        << "oracle_value_error " << cm.value_error << '\n'
        << "oracle_invariance_error " << cm.invariance_error << '\n'
        << "oracle_rules_invariant " << (cm.rules_invariant ? "true" : "false") << '\n';
    if (!cm.ok()) code = kExitVerification;
  }
  return code;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  const Problem p = build_problem(c);
  if (c.describe) {
    out << p.description << "X = " << p.x << ", Y = " << p.y << "\n";
    return kExitOk;
  }
  const GccGame game(p.gcc());
  const RulePair rules = load_rules(*c.rules, p.tree);
  if (!rules.buyer || !rules.seller) throw ModelError("rules file must list both the buyer and the seller rule");
  const NepReport snell = verify_nep_snell(game, *rules.buyer, *rules.seller, c.tol);
  std::optional<NepReport> exhaustive;
  if (p.tree.non_terminal_count() <= kDefaultEnumerationCap && !p.tree.recombining()) {
    exhaustive = verify_nep_exhaustive(game, *rules.buyer, *rules.seller, c.tol);
  }
  {
    auto os = open_output(c, "verification.json");
    write_verification_report(os, *rules.buyer, *rules.seller, snell, exhaustive);
  }
  out << "j_buyer " << z(snell.j_buyer) << '\n' << "j_seller " << z(snell.j_seller) << '\n';
  print_nep(out, "snell", snell);
  if (exhaustive) {
    print_nep(out, "exhaustive", *exhaustive);
  } else {
    out << "exhaustive skipped (tree above the enumeration cap)\n";
  }
  const bool ok = snell.is_nep() && (!exhaustive || exhaustive->is_nep());
  return ok ? kExitOk : kExitVerification;
}

int cmd_selftest(const RunConfig& c, std::ostream& out) {
  if (c.describe) {
    out << "selftest: randomized property suite over " << c.trees << " incomplete trees per seed, seeds " << c.seed
        << ".." << c.seed + static_cast<std::uint64_t>(c.seeds) - 1
        << (c.inject_fault ? ", with a biased valuation operator" : "") << "\n";
    return kExitOk;
  }
  std::vector<SuiteReport> reports(static_cast<std::size_t>(c.seeds));
  std::vector<std::string> errors(reports.size());
  std::size_t next = 0;
  std::mutex m;
  const auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next == reports.size()) return;
        i = next++;
      }
      SuiteOptions opt;
      opt.seed = c.seed + i;
      opt.trees = c.trees;
      if (c.inject_fault) opt.valuation = biased_valuation(1e-3);
      try {
        reports[i] = run_property_suite(opt);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(c.threads, c.seeds);
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  bool ok = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::uint64_t seed = c.seed + i;
    if (!errors[i].empty()) {
      out << "seed " << seed << " ERROR " << errors[i] << '\n';
      ok = false;
      continue;
    }
    if (reports.size() == 1) {
      print_suite_report(out, reports[i]);
    } else {
      out << "seed " << seed << (reports[i].ok() ? " PASS" : " FAIL") << '\n';
      for (const auto& check : reports[i].checks) {
        if (!check.pass()) out << "  FAIL " << check.group << ' ' << check.name << " worst=" << check.worst << '\n';
      }
    }
    ok = ok && reports[i].ok();
  }
  out << "selftest " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitVerification;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  int code = kExitFailure;
  try {
    config.validate();
    switch (config.command) {
      case Command::kPrice: code = cmd_price(config, out); break;
      case Command::kAmerican: code = cmd_american(config, out); break;
      case Command::kNash: code = cmd_nash(config, out); break;
      case Command::kVerify: code = cmd_verify(config, out); break;
      case Command::kSelftest: code = cmd_selftest(config, out); break;
    }
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitInvalid;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    code = kExitInvalid;
  } catch (const NoConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitNoConvergence;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    code = kExitFailure;
  }
  out.flags(flags);
  out.precision(precision);
  return code;
}

}  // namespace gccsolver::cli
