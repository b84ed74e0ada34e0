// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gccsolver/dynkin.hpp"
#include "gccsolver/property_suite.hpp"
#include "gccsolver_cli/scenarios.hpp"

using namespace gccsolver;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  bool pass;
  std::string detail;
};

bool only_root(const StoppingRule& r) { return r.first_stop_nodes() == std::vector<NodeId>{0}; }
bool at_maturity(const StoppingRule& r) { return r.first_stop_nodes().empty(); }

cli::Problem scenario(const std::string& name, int steps, std::optional<Layout> layout = std::nullopt) {
  cli::RunConfig c;
  c.scenario = name;
  c.steps = steps;
  c.layout = layout;
  return cli::build_problem(c);
}

// Drifted-walk game at several lattice sizes. `case2` expects both rules at maturity.
Line example41(bool case2) {
  std::ostringstream d;
  bool ok = true;
  const char* name = case2 ? "example41-case2" : "example41-case1";
  struct Run {
    int steps;
    Layout layout;
    double budget;
  };
  for (const Run run : {Run{10, Layout::kFullTree, 5.0}, Run{18, Layout::kFullTree, 10.0},
                        Run{50, Layout::kRecombining, 5.0}}) {
    const auto t0 = Clock::now();
    const auto p = scenario(name, run.steps, run.layout);
    const GccGame game(p.gcc());
    const auto r = nash_iterate(game, Player::kBuyer);
    const auto rep = verify_nep_snell(game, r.buyer_rule, r.seller_rule, 1e-9);
    const double secs = seconds_since(t0);
    const bool rules_ok = at_maturity(r.buyer_rule) && (case2 ? at_maturity(r.seller_rule) : only_root(r.seller_rule));
    const bool run_ok = r.converged && rules_ok && rep.buyer_gap <= 1e-9 && rep.seller_gap <= 1e-9 && secs < run.budget;
    ok = ok && run_ok;
    d << " steps=" << run.steps << (run.layout == Layout::kRecombining ? "(lattice)" : "(full)") << ":"
      << (run_ok ? "ok" : "FAIL") << " gaps=" << std::max(rep.buyer_gap, rep.seller_gap) << " t=" << secs << "s";
  }
  return {ok, d.str()};
}

Line example43() {
  const auto t0 = Clock::now();
  const auto p = scenario("example43", 3);
  const GccGame game(p.gcc());
  const auto b = nash_iterate(game, Player::kBuyer);
  const auto s = nash_iterate(game, Player::kSeller);
  const bool shapes = only_root(b.buyer_rule) && at_maturity(b.seller_rule) && at_maturity(s.buyer_rule) &&
                      only_root(s.seller_rule);
  const auto eb = verify_nep_exhaustive(game, b.buyer_rule, b.seller_rule, 1e-9);
  const auto es = verify_nep_exhaustive(game, s.buyer_rule, s.seller_rule, 1e-9);
  const double worst = std::max({eb.buyer_gap, eb.seller_gap, es.buyer_gap, es.seller_gap});
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << " buyer-first=" << (only_root(b.buyer_rule) && at_maturity(b.seller_rule) ? "(0,T)" : "other")
    << " seller-first=" << (at_maturity(s.buyer_rule) && only_root(s.seller_rule) ? "(T,0)" : "other")
    << " max exhaustive gain=" << worst << " t=" << secs << "s";
  return {shapes && eb.is_nep() && es.is_nep() && secs < 10.0, d.str()};
}

Line group(const SuiteReport& rep, const std::vector<std::string>& names, double secs = -1.0, double budget = 0.0) {
  bool ok = true;
  double worst = 0.0;
  std::size_t cases = 0;
  std::ostringstream failed;
  for (const auto& n : names) {
    const auto& c = rep.find(n);
    ok = ok && c.pass();
    worst = std::max(worst, c.worst);
    cases += c.cases;
    if (!c.pass()) failed << " [" << n << "]";
  }
  std::ostringstream d;
  d << " checks=" << names.size() << " cases=" << cases << " worst residual=" << worst;
  if (secs >= 0.0) {
    d << " t=" << secs << "s";
    ok = ok && secs < budget;
  }
  if (!failed.str().empty()) d << " failed:" << failed.str();
  return {ok, d.str()};
}

Line note33() {
  bool ok = true;
  double worst = 0.0;
  std::ostringstream d;
  for (double n : {1.0, 5.0, 20.0}) {
    for (int steps : {1, 3}) {
      cli::RunConfig c;
      c.scenario = "note33";
      c.n = n;
      c.steps = steps;
      const auto p = cli::build_problem(c);
      const double alpha = p.alpha_b, pa = 0.3;
      const double pi = value_at(Valuer(p.tree, p.buyer()), p.terminal(p.claim));
      const double residual = std::abs(std::exp(-alpha * pi) - (std::exp(-alpha * n) * pa + 1.0 - pa));
      const double bound = -std::log(1.0 - pa) / alpha;
      worst = std::max(worst, residual);
      ok = ok && residual <= 1e-12 && pi <= bound;
      if (steps == 1) d << " n=" << n << ":pi0=" << pi;
    }
  }
  d << " bound=" << -std::log(0.7) << " worst residual=" << worst;
  return {ok, d.str()};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* title, const Line& line) {
    std::printf("criterion %d %s: %s:%s\n", id, line.pass ? "PASS" : "FAIL", title, line.detail.c_str());
    std::fflush(stdout);
    failures += line.pass ? 0 : 1;
  };
  const auto guarded = [&](int id, const char* title, const std::function<Line()>& f) {
    try {
      report(id, title, f());
    } catch (const std::exception& e) {
      report(id, title, Line{false, std::string(" exception: ") + e.what()});
    }
  };

  guarded(1, "example41-case1, seller recalls immediately", [] { return example41(false); });
  guarded(2, "example41-case2, settled at maturity", [] { return example41(true); });
  guarded(3, "example43, (0,T) and (T,0) by first mover", example43);

  SuiteOptions options;  // 100 incomplete trees, 1000 dual samples, 30 complete trees
  const auto t0 = Clock::now();
  SuiteReport suite;
  std::string suite_error;
  try {
    suite = run_property_suite(options);
  } catch (const std::exception& e) {
    suite_error = e.what();
  }
  const double suite_secs = seconds_since(t0);
  const auto from_suite = [&](int id, const char* title, const std::function<Line()>& f) {
    if (!suite_error.empty()) {
      report(id, title, Line{false, " property suite aborted: " + suite_error});
    } else {
      guarded(id, title, f);
    }
  };

  from_suite(4, "valuation property suite", [&] {
    return group(suite,
                 {"boundedness", "monotonicity", "strict root monotonicity", "replication invariance",
                  "replication cost preservation", "local property", "time consistency", "sup-norm continuity"},
                 suite_secs, 60.0);
  });
  from_suite(5, "dual representation", [&] {
    return group(suite, {"dual gap nonnegative", "dual gap zero at pricing measure", "dual gap zero at optimal measure",
                         "emmm entropy minimal", "emmm duality identity"});
  });
  from_suite(6, "Snell oracle equivalence", [&] {
    return group(suite, {"root equals exhaustive optimum", "hitting rule attains root value",
                         "ratio representation matches envelope", "ratio parts are P-supermartingales"});
  });
  from_suite(7, "complete-market degeneration", [&] {
    return group(suite, {"value invariant in risk aversion and endowment", "equilibrium value equals zero-sum game value",
                         "buyer value is minus seller value"});
  });
  from_suite(8, "monotone iteration", [&] {
    return group(suite, {"rules monotone along iteration", "iteration converges within cap",
                         "simultaneous stops only after maturity runs", "early stop implies earlier first hit",
                         "responses are exhaustive best responses"});
  });
  guarded(9, "bounded values for exploding claims (no hedging)", note33);

  std::printf("acceptance: %d failure(s); property suite over %zu incomplete trees (%zu enumerable), %zu complete\n",
              failures, suite.incomplete_trees, suite.enumerable_trees, suite.complete_trees);
  return failures == 0 ? 0 : 1;
}
