#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gccsolver/dynkin.hpp"

namespace gccsolver::cli {

enum class Command { kPrice, kAmerican, kNash, kVerify, kSelftest };

const char* to_string(Command c);
Command parse_command(const std::string& name);

/// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal failure
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitVerification = 4;

/// Everything a single invocation needs. Unset optionals take the
/// scenario's defaults (or the model file's conventions).
struct RunConfig {
  Command command = Command::kPrice;

  std::optional<std::filesystem::path> model;
  std::optional<std::string> scenario;

  std::optional<int> steps;
  std::optional<double> alpha_a;  // seller
  std::optional<double> alpha_b;  // buyer
  std::optional<double> delta;
  std::optional<double> mu;
  std::optional<double> n;        // note33 claim size
  std::optional<double> prob_a;   // note33 P[A]
  std::optional<double> strike;   // put scenario
  std::optional<std::string> endowment_a;
  std::optional<std::string> endowment_b;
  std::optional<std::string> x;
  std::optional<std::string> y;
  std::optional<std::string> payoff;
  std::optional<std::string> claim;
  std::optional<Layout> layout;

  Player first_mover = Player::kBuyer;
  int max_iter = 0;  // 0: theoretical cap
  double tol = 1e-9;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> rules;
  std::uint64_t seed = 1;
  int seeds = 1;
  int threads = 1;
  int trees = 100;
  bool describe = false;
  std::string oracle;  // "" or "riskneutral"
  bool inject_fault = false;
  bool dump_diagnostics = false;

  /// Throws ModelError when the configuration is inconsistent.
  void validate() const;
};

}  // namespace gccsolver::cli
