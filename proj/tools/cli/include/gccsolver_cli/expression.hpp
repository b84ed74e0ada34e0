#pragma once

// Affine payoff expressions over named drivers, e.g. "W + 0.5*t - 1".

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gccsolver::cli {

struct AffineExpr {
  double constant = 0.0;
  std::map<std::string, double> coefficients;  // driver name -> weight

  std::vector<std::string> drivers() const;
  /// `lookup` returns nullopt for an unknown driver; evaluation then throws ModelError.
  double evaluate(const std::function<std::optional<double>(const std::string&)>& lookup) const;
};

/// Grammar: sum of terms, each term a product of numbers with at most one
/// driver name. Throws ModelError on anything else.
AffineExpr parse_affine(const std::string& text);

}  // namespace gccsolver::cli
