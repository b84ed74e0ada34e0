#include "gccsolver_cli/run_config.hpp"

#include <cmath>

#include "gccsolver/errors.hpp"

namespace gccsolver::cli {

const char* to_string(Command c) {
  switch (c) {
    case Command::kPrice: return "price";
    case Command::kAmerican: return "american";
    case Command::kNash: return "nash";
    case Command::kVerify: return "verify";
    case Command::kSelftest: return "selftest";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::kPrice, Command::kAmerican, Command::kNash, Command::kVerify, Command::kSelftest}) {
    if (name == to_string(c)) return c;
  }
  throw ModelError("unknown command \"" + name + "\"");
}

void RunConfig::validate() const {
  if (command != Command::kSelftest) {
    if (model.has_value() == scenario.has_value()) {
      throw ModelError("give exactly one of --model and --scenario");
    }
  }
  for (const auto& a : {alpha_a, alpha_b}) {
    if (a && !(*a > 0.0 && std::isfinite(*a))) throw ModelError("risk aversion must be positive and finite");
  }
  if (steps && *steps < 1) throw ModelError("--steps must be at least 1");
  if (max_iter < 0) throw ModelError("--max-iter must be nonnegative");
  if (!(tol > 0.0)) throw ModelError("--tol must be positive");
  if (threads < 1) throw ModelError("--threads must be at least 1");
  if (seeds < 1) throw ModelError("--seeds must be at least 1");
  if (trees < 1) throw ModelError("--trees must be at least 1");
  if (!oracle.empty() && oracle != "riskneutral") throw ModelError("unknown oracle \"" + oracle + "\"");
  if (command == Command::kVerify && !rules && !describe) throw ModelError("verify needs --rules FILE");
}

}  // namespace gccsolver::cli
