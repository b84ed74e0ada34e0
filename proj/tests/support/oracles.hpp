#pragma once

// Independent reference computations used only by the tests. They share no
// code with the solver beyond the tree and process containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

#include "gccsolver/lattice.hpp"

namespace gccsolver::testing {

/// One-step tree with dim 0 or 1 given explicit branches.
inline EventTree one_step_tree(std::initializer_list<double> probs, std::initializer_list<double> increments,
                               double horizon = 1.0) {
  const std::size_t dim = increments.size() == 0 ? 0 : 1;
  EventTree::Builder b(dim, horizon);
  const NodeId root = b.add_node(0);
  auto inc = increments.begin();
  for (double p : probs) {
    const NodeId c = b.add_node(1);
    if (dim == 0) {
      b.add_branch(root, c, p, {});
    } else {
      const double s = *inc++;
      b.add_branch(root, c, p, std::span<const double>(&s, 1));
    }
  }
  return std::move(b).build();
}

/// log sum_i p_i exp(-alpha (v_i + h s_i)), evaluated stably.
inline double log_objective(const std::vector<double>& p, const std::vector<double>& s, const std::vector<double>& v,
                            double alpha, double h) {
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> e(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    e[i] = -alpha * (v[i] + (s.empty() ? 0.0 : h * s[i]));
    m = std::max(m, e[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] * std::exp(e[i] - m);
  return m + std::log(sum);
}

/// Certainty equivalent by golden-section search over the hedge (d <= 1).
inline double golden_section_ce(const std::vector<double>& p, const std::vector<double>& s,
                                const std::vector<double>& v, double alpha, double* hedge = nullptr) {
  if (s.empty()) return -log_objective(p, s, v, alpha, 0.0) / alpha;
  double lo = -1e3, hi = 1e3;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = log_objective(p, s, v, alpha, a), fb = log_objective(p, s, v, alpha, b);
  for (int it = 0; it < 400; ++it) {
    if (fa < fb) {
      hi = b, b = a, fb = fa;
      a = hi - g * (hi - lo);
      fa = log_objective(p, s, v, alpha, a);
    } else {
      lo = a, a = b, fa = fb;
      b = lo + g * (hi - lo);
      fb = log_objective(p, s, v, alpha, b);
    }
  }
  const double h = 0.5 * (lo + hi);
  if (hedge) *hedge = h;
  return -log_objective(p, s, v, alpha, h) / alpha;
}

/// Unique risk-neutral weights of a two-branch step with increments (u, d).
inline std::pair<double, double> binomial_q(double u, double d) {
  const double q = -d / (u - d);
  return {q, 1.0 - q};
}

/// Classical backward induction on a complete binomial tree:
/// val_T = terminal, val_t = combine(t-node, E^Q[val_{t+1}]).
inline std::vector<double> risk_neutral_dp(const EventTree& tree, const std::function<double(NodeId)>& terminal,
                                           const std::function<double(NodeId, double)>& combine) {
  std::vector<double> val(tree.size());
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      val[v] = terminal(v);
      continue;
    }
    const auto kids = tree.children(v);
    const auto inc = tree.increments(v);
    const auto [qu, qd] = binomial_q(inc[0], inc[1]);
    val[v] = combine(v, qu * val[kids[0]] + qd * val[kids[1]]);
  }
  return val;
}

/// All root-to-leaf paths of a full tree.
inline std::vector<std::vector<NodeId>> all_paths(const EventTree& tree) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> path{tree.root()};
  std::function<void()> rec = [&] {
    const NodeId v = path.back();
    if (tree.is_terminal(v)) {
      out.push_back(path);
      return;
    }
    for (NodeId c : tree.children(v)) {
      path.push_back(c);
      rec();
      path.pop_back();
    }
  };
  rec();
  return out;
}

/// Path probability under the tree's law.
inline double path_probability(const EventTree& tree, const std::vector<NodeId>& path) {
  double p = 1.0;
  for (std::size_t k = 1; k < path.size(); ++k) p *= tree.edge_probs()[tree.in_edge(path[k])];
  return p;
}

}  // namespace gccsolver::testing
