#include <ostream>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "gccsolver/errors.hpp"
#include "gccsolver_cli/commands.hpp"
#include "gccsolver_cli/scenarios.hpp"

namespace gccsolver::cli {

namespace {

template <class T>
void optional_flag(CLI::App& app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app.add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

std::string scenario_help() {
  std::ostringstream os;
  os << "built-in scenario:";
  for (const auto& s : scenario_catalog()) os << "\n  " << s.name << ": " << s.summary;
  return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Indifference valuation, nonlinear optimal stopping and game contingent claims on event trees",
               "gccsolver"};
  app.require_subcommand(1);

  std::string model, layout, first_mover = "buyer";
  app.add_option("--model", model, "model file (gccsolver-model-v1 JSON)");
  optional_flag(app, "--scenario", c.scenario, scenario_help());
  optional_flag(app, "--steps", c.steps, "time steps of a built-in scenario");
  optional_flag(app, "--alpha-a", c.alpha_a, "seller risk aversion");
  optional_flag(app, "--alpha-b", c.alpha_b, "buyer risk aversion (also the holder in price/american)");
  optional_flag(app, "--delta", c.delta, "recall penalty");
  optional_flag(app, "--mu", c.mu, "payoff drift");
  optional_flag(app, "--n", c.n, "claim size (note33)");
  optional_flag(app, "--prob-a", c.prob_a, "P[A] (note33)");
  optional_flag(app, "--strike", c.strike, "strike (put)");
  optional_flag(app, "--endowment-a", c.endowment_a, "seller endowment: affine expression evaluated at maturity");
  optional_flag(app, "--endowment-b", c.endowment_b, "buyer endowment: affine expression evaluated at maturity");
  optional_flag(app, "--x", c.x, "exercise payoff X (affine expression over drivers)");
  optional_flag(app, "--y", c.y, "recall payoff Y (affine expression over drivers)");
  optional_flag(app, "--payoff", c.payoff, "American payoff L (affine expression over drivers)");
  optional_flag(app, "--claim", c.claim, "terminal claim H (affine expression over drivers)");
  app.add_option("--layout", layout, "full | recombining (default: recombining above 18 steps)")
      ->check(CLI::IsMember({"full", "recombining"}));
  app.add_option("--first-mover", first_mover, "buyer | seller")->check(CLI::IsMember({"buyer", "seller"}));
  app.add_option("--max-iter", c.max_iter, "half-step cap of the best-response iteration (0: theoretical cap)");
  app.add_option("--tol", c.tol, "verification tolerance");
  app.add_option("--out", c.out, "output directory");
  app.add_option("--rules", c.rules, "stopping-rule file (verify)");
  app.add_option("--seed", c.seed, "selftest seed");
  app.add_option("--seeds", c.seeds, "number of consecutive selftest seeds");
  app.add_option("--trees", c.trees, "random trees per selftest seed");
  app.add_option("--threads", c.threads, "worker threads (selftest seeds run in parallel)");
  app.add_option("--oracle", c.oracle, "cross-check against an independent oracle")
      ->check(CLI::IsMember({"riskneutral"}));
  app.add_flag("--describe", c.describe, "print the resolved problem and exit");
  app.add_flag("--inject-fault", c.inject_fault, "selftest with a deliberately biased valuation operator");
  app.add_flag("--dump-diagnostics", c.dump_diagnostics, "write pricing-measure diagnostics to OUT/measure.txt");

  const std::pair<Command, const char*> subcommands[] = {
      {Command::kPrice, "indifference value process of a terminal claim"},
      {Command::kAmerican, "nonlinear Snell envelope and optimal stopping rule"},
      {Command::kNash, "best-response iteration for the game claim"},
      {Command::kVerify, "check a pair of stopping rules for equilibrium"},
      {Command::kSelftest, "randomized property suite"},
  };
  for (const auto& [cmd, help] : subcommands) {
    app.add_subcommand(to_string(cmd), help)->fallthrough()->callback([&c, cmd = cmd] { c.command = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  if (!model.empty()) c.model = model;
  if (!layout.empty()) c.layout = layout == "full" ? Layout::kFullTree : Layout::kRecombining;
  c.first_mover = first_mover == "seller" ? Player::kSeller : Player::kBuyer;
  return run(c, out, err);
}

}  // namespace gccsolver::cli
