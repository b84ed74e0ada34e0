#pragma once

// Built-in scenarios and model files, resolved into one problem description.

#include <map>
#include <string>
#include <vector>

#include "gccsolver/dynkin.hpp"
#include "gccsolver_cli/run_config.hpp"

namespace gccsolver::cli {

struct ScenarioInfo {
  std::string name;
  std::string summary;
};

const std::vector<ScenarioInfo>& scenario_catalog();

/// Tree, named drivers and the payoff expressions of one run. The time
/// driver "t" (in years) is always available.
struct Problem {
  std::string source;
  std::string description;  // parameters and constraint checks, for --describe
  EventTree tree;
  std::map<std::string, AdaptedProcess> drivers;
  std::map<std::string, TerminalClaim> claims;  // terminal-only drivers

  std::string claim;    // price
  std::string payoff;   // american
  std::string x, y;     // nash, verify
  std::string endowment_a, endowment_b;
  double alpha_a = 1.0;
  double alpha_b = 1.0;

  AdaptedProcess process(const std::string& expr) const;
  TerminalClaim terminal(const std::string& expr) const;
  Agent buyer() const;
  Agent seller() const;
  GccSpec gcc() const;
};

/// Throws ModelError for unknown scenarios, bad files or bad expressions.
Problem build_problem(const RunConfig& config);

}  // namespace gccsolver::cli
