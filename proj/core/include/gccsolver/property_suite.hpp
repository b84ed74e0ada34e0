#pragma once

// Randomized property checks over incomplete and complete trees: the
// valuation properties, duality, Snell optimality, complete-market
// degeneration and best-response iteration invariants.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gccsolver/indifference.hpp"

namespace gccsolver {

/// Valuation operator under test; the default is european_value_process.
using ValuationFn = std::function<AdaptedProcess(const Valuer&, const TerminalClaim&)>;

ValuationFn default_valuation();
/// Deliberately wrong operator (adds `bias` to every value) used to check
/// that the suite detects faults.
ValuationFn biased_valuation(double bias);

struct PropertyCheck {
  std::string group;  // valuation, duality, snell, complete, iteration
  std::string name;
  double tolerance = 0.0;
  double worst = 0.0;  // largest residual seen
  std::size_t cases = 0;
  std::size_t failures = 0;
  bool pass() const noexcept { return failures == 0 && cases > 0; }
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int trees = 100;           // random incomplete trinomial trees
  int max_steps = 5;
  int dual_samples = 1000;   // sampled martingale measures per tree
  int random_rules = 200;    // rules per tree for the supermartingale check
  int complete_trees = 30;   // random complete binomial trees
  int max_complete_steps = 6;
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  ValuationFn valuation = default_valuation();
};

struct SuiteReport {
  std::vector<PropertyCheck> checks;
  std::size_t incomplete_trees = 0;
  std::size_t enumerable_trees = 0;  // trees small enough for exhaustive checks
  std::size_t complete_trees = 0;

  bool ok() const;
  bool group_ok(const std::string& group) const;
  const PropertyCheck& find(const std::string& name) const;
};

SuiteReport run_property_suite(const SuiteOptions& options);

/// One line per check: status, group, name, cases, worst residual, tolerance.
void print_suite_report(std::ostream& os, const SuiteReport& report);

}  // namespace gccsolver
