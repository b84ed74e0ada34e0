#include "gccsolver/exputil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "gccsolver/errors.hpp"

namespace gccsolver {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> z) {
  double m = kNegInf;
  for (double x : z) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : z) s += std::exp(x - m);
  return m + std::log(s);
}

double max_abs(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s = std::max(s, std::abs(x));
  return s;
}

void check_inputs(std::span<const double> probs, std::span<const double> increments, std::size_t dim,
                  std::span<const double> values, double alpha) {
  if (probs.empty()) throw ContractViolation("one_step_ce: no branches");
  if (values.size() != probs.size()) throw ContractViolation("one_step_ce: values/probs size mismatch");
  if (increments.size() != probs.size() * dim) throw ContractViolation("one_step_ce: increment block size mismatch");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractViolation("one_step_ce: risk aversion must be positive");
  for (double v : values) {
    if (!std::isfinite(v)) throw ContractViolation("one_step_ce: non-finite claim value");
  }
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ContractViolation("one_step_ce: invalid probability");
  }
  for (double x : increments) {
    if (!std::isfinite(x)) throw ContractViolation("one_step_ce: non-finite increment");
  }
}

// Closed form for one asset with an up and a down branch: the dual weights are
// the unique one-step martingale measure.
OneStepSolution binary_complete_step(std::span<const double> probs, std::span<const double> s,
                                     std::span<const double> values, double alpha) {
  const double q0 = -s[1] / (s[0] - s[1]);
  const double q1 = s[0] / (s[0] - s[1]);
  const double a0 = std::log(probs[0]) - alpha * values[0];
  const double a1 = std::log(probs[1]) - alpha * values[1];
  const double theta = (a0 - a1 + std::log(q1 / q0)) / (s[0] - s[1]);
  // log min f = sum_i q_i (a_i - log q_i), a convex combination that stays exact in the tails
  const double log_min = q0 * (a0 - std::log(q0)) + q1 * (a1 - std::log(q1));
  OneStepSolution out;
  out.certainty_equivalent = -log_min / alpha;
  out.holding = {theta / alpha};
  out.dual_weights = {q0, q1};
  out.iterations = 0;
  return out;
}

bool is_binary_complete(std::span<const double> probs, std::span<const double> increments, std::size_t dim) {
  return dim == 1 && probs.size() == 2 && probs[0] > 0.0 && probs[1] > 0.0 &&
         ((increments[0] > 0.0 && increments[1] < 0.0) || (increments[0] < 0.0 && increments[1] > 0.0));
}

// Damped Newton for min_theta LSE(a - S theta) restricted to the span of the
// increments (pseudo-inverse steps from theta = 0 give the minimum-norm minimizer).
OneStepSolution newton_step(std::span<const double> probs, std::span<const double> increments, std::size_t dim,
                            std::span<const double> values, double alpha) {
  const Eigen::Index k = static_cast<Eigen::Index>(probs.size());
  const Eigen::Index d = static_cast<Eigen::Index>(dim);
  Eigen::Map<const RowMatrix> S(increments.data(), k, d);
  Eigen::VectorXd a(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i) = probs[static_cast<std::size_t>(i)] > 0.0 ? std::log(probs[static_cast<std::size_t>(i)]) -
                                                          alpha * values[static_cast<std::size_t>(i)]
                                                    : kNegInf;
  }
  const double scale = std::max(max_abs(increments), std::numeric_limits<double>::min());
  const double grad_tol = 1e-12 * scale;

  auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* w) {
    Eigen::VectorXd z = a - S * theta;
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (a(i) == kNegInf) e(i) = 0.0;
    }
    const double sum = e.sum();
    if (w) *w = e / sum;
    return m + std::log(sum);
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd w;
  double g = objective(theta, &w);
  int it = 0;
  bool converged = false;
  for (; it < 200; ++it) {
    const Eigen::VectorXd mean = S.transpose() * w;
    const Eigen::VectorXd grad = -mean;
    if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd H = S.transpose() * w.asDiagonal() * S - mean * mean.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    const double lam_max = eig.eigenvalues().maxCoeff();
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double lam = eig.eigenvalues()(j);
      if (lam > 1e-14 * lam_max && lam > 0.0) {
        const Eigen::VectorXd u = eig.eigenvectors().col(j);
        dir -= (u.dot(grad) / lam) * u;
      }
    }
    const double slope = grad.dot(dir);
    if (!(slope < 0.0)) dir = -grad;
    if (slope < 0.0 && -slope <= 1e-13 * std::max(1.0, std::abs(g))) {
      // decrement below rounding of g: take the plain Newton step
      theta += dir;
      g = objective(theta, &w);
      continue;
    }
    double step = 1.0;
    Eigen::VectorXd trial_w;
    double trial_g = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = theta + step * dir;
      trial_g = objective(trial, &trial_w);
      if (trial_g <= g + 1e-4 * step * grad.dot(dir)) {
        theta = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // rounding floor: accept if the gradient is already tiny
      converged = grad.lpNorm<Eigen::Infinity>() <= 1e-9 * scale;
      break;
    }
    g = trial_g;
    w = trial_w;
  }
  if (!converged) converged = (S.transpose() * w).lpNorm<Eigen::Infinity>() <= 1e-9 * scale;
  if (!converged) {
    throw ArbitrageError("one-step hedging problem did not converge (gradient norm above tolerance)");
  }
  OneStepSolution out;
  out.certainty_equivalent = -g / alpha;
  out.holding.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) out.holding[j] = theta(static_cast<Eigen::Index>(j)) / alpha;
  out.dual_weights.assign(w.data(), w.data() + k);
  out.iterations = it;
  return out;
}

// Scalar damped Newton for dim == 1 and any branch count; no heap use.
double scalar_newton_value(std::span<const double> probs, std::span<const double> s,
                           std::span<const double> values, double alpha) {
  const std::size_t k = probs.size();
  const double scale = max_abs(s);
  auto eval = [&](double theta, double& mean, double& var) {
    double m = kNegInf;
    for (std::size_t i = 0; i < k; ++i) {
      if (probs[i] > 0.0) m = std::max(m, std::log(probs[i]) - alpha * values[i] - theta * s[i]);
    }
    double sum = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(probs[i] > 0.0)) continue;
      const double e = std::exp(std::log(probs[i]) - alpha * values[i] - theta * s[i] - m);
      sum += e;
      s1 += e * s[i];
      s2 += e * s[i] * s[i];
    }
    mean = s1 / sum;
    var = s2 / sum - mean * mean;
    return m + std::log(sum);
  };
  double theta = 0.0, mean = 0.0, var = 0.0;
  double g = eval(theta, mean, var);
  for (int it = 0; it < 200; ++it) {
    if (std::abs(mean) <= 1e-12 * scale) return -g / alpha;
    const double dir = var > 0.0 ? mean / var : mean;  // -grad / hess with grad = -mean
    if (var > 0.0 && mean * dir <= 1e-13 * std::max(1.0, std::abs(g))) {
      // decrement below rounding of g: the line search cannot see progress
      theta += dir;
      g = eval(theta, mean, var);
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double m2 = 0.0, v2 = 0.0;
      const double trial_g = eval(theta + step * dir, m2, v2);
      if (trial_g <= g - 1e-4 * step * mean * dir) {
        theta += step * dir;
        g = trial_g;
        mean = m2;
        var = v2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (std::abs(mean) <= 1e-9 * scale) return -g / alpha;
      break;
    }
  }
  if (std::abs(mean) <= 1e-9 * scale) return -g / alpha;
  throw ArbitrageError("one-step hedging problem did not converge (gradient norm above tolerance)");
}

bool all_zero(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return x == 0.0; });
}

}  // namespace

// ---------------------------------------------------------------------------

Agent Agent::without_endowment(const EventTree& tree, double risk_aversion) {
  return Agent{risk_aversion, TerminalClaim::constant(tree, 0.0)};
}

void Agent::validate() const {
  if (!(risk_aversion > 0.0) || !std::isfinite(risk_aversion)) {
    throw ModelError("risk aversion must be positive and finite");
  }
}

OneStepSolution one_step_ce(std::span<const double> probs, std::span<const double> increments, std::size_t dim,
                            std::span<const double> values, double alpha) {
  check_inputs(probs, increments, dim, values, alpha);
  const std::size_t k = probs.size();

  if (dim == 0 || all_zero(increments)) {
    std::vector<double> z(k);
    for (std::size_t i = 0; i < k; ++i) z[i] = probs[i] > 0.0 ? std::log(probs[i]) - alpha * values[i] : kNegInf;
    const double lse = log_sum_exp(z);
    OneStepSolution out;
    out.certainty_equivalent = -lse / alpha;
    out.holding.assign(dim, 0.0);
    out.dual_weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) out.dual_weights[i] = std::exp(z[i] - lse);
    return out;
  }
  if (is_binary_complete(probs, increments, dim)) return binary_complete_step(probs, increments, values, alpha);

  // arbitrage check on the branches that carry mass
  std::vector<double> live;
  std::size_t live_count = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (probs[i] > 0.0) {
      live.insert(live.end(), increments.begin() + static_cast<std::ptrdiff_t>(i * dim),
                  increments.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      ++live_count;
    }
  }
  if (!zero_in_relative_interior(live, live_count, dim)) {
    throw ArbitrageError("one-step arbitrage: hedging objective is unbounded below");
  }
  return newton_step(probs, increments, dim, values, alpha);
}

double one_step_certainty_equivalent(std::span<const double> probs, std::span<const double> increments,
                                     std::size_t dim, std::span<const double> values, double alpha) {
  const std::size_t k = probs.size();
  if (dim == 0 || all_zero(increments)) {
    if (values.size() != k) throw ContractViolation("one_step_ce: values/probs size mismatch");
    if (!(alpha > 0.0)) throw ContractViolation("one_step_ce: risk aversion must be positive");
    double m = kNegInf;
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(values[i])) throw ContractViolation("one_step_ce: non-finite claim value");
      if (probs[i] > 0.0) m = std::max(m, std::log(probs[i]) - alpha * values[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (probs[i] > 0.0) sum += std::exp(std::log(probs[i]) - alpha * values[i] - m);
    }
    return -(m + std::log(sum)) / alpha;
  }
  if (dim == 1) {
    check_inputs(probs, increments, dim, values, alpha);
    if (is_binary_complete(probs, increments, dim)) {
      return binary_complete_step(probs, increments, values, alpha).certainty_equivalent;
    }
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (probs[i] > 0.0) {
        lo = std::min(lo, increments[i]);
        hi = std::max(hi, increments[i]);
      }
    }
    if (!(lo < 0.0 && hi > 0.0)) throw ArbitrageError("one-step arbitrage: hedging objective is unbounded below");
    return scalar_newton_value(probs, increments, values, alpha);
  }
  return one_step_ce(probs, increments, dim, values, alpha).certainty_equivalent;
}

// ---------------------------------------------------------------------------

std::span<const double> TiltedTree::probs(NodeId v) const {
  return {tilted_prob.data() + base.first_edge(v), base.branch_count(v)};
}

double TiltedTree::normalizer(NodeId v) const { return std::exp(log_normalizer[v]); }

TiltedTree tilt_measure(const EventTree& tree, const TerminalClaim& C, double alpha) {
  require_same_tree(tree, C.tree(), "tilt_measure");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractViolation("tilt_measure: alpha must be positive");
  TiltedTree out{tree, alpha, std::vector<double>(tree.edge_count()), std::vector<double>(tree.size())};
  const auto base = tree.edge_probs();
  const auto order = tree.order();
  std::vector<double> z;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      out.log_normalizer[v] = -alpha * C.at(v);
      continue;
    }
    const auto kids = tree.children(v);
    const EdgeId e0 = tree.first_edge(v);
    z.resize(kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) z[i] = std::log(base[e0 + i]) + out.log_normalizer[kids[i]];
    const double lm = log_sum_exp(z);
    if (!std::isfinite(lm)) throw NumericError("tilt_measure: normalizer overflow at node " + std::to_string(v));
    out.log_normalizer[v] = lm;
    for (std::size_t i = 0; i < kids.size(); ++i) out.tilted_prob[e0 + i] = std::exp(z[i] - lm);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::span<const double> MartingaleMeasure::probs(NodeId v) const {
  return {transition_prob.data() + tree.first_edge(v), tree.branch_count(v)};
}

std::vector<double> martingale_projection(std::span<const double> weights, std::span<const double> increments,
                                          std::size_t dim, std::vector<double>* lambda_out) {
  const std::size_t k = weights.size();
  if (increments.size() != k * dim) throw ContractViolation("martingale_projection: size mismatch");
  std::vector<double> logw(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw ContractViolation("martingale_projection: weights must be positive");
    }
    logw[i] = std::log(weights[i]);
  }
  std::vector<double> lambda(dim, 0.0);
  auto tilted = [&](std::span<const double> lam) {
    std::vector<double> z(k);
    for (std::size_t i = 0; i < k; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += lam[j] * increments[i * dim + j];
      z[i] = logw[i] + dot;
    }
    const double lse = log_sum_exp(z);
    for (double& x : z) x = std::exp(x - lse);
    return z;
  };

  if (dim == 0 || all_zero(increments)) {
    if (lambda_out) *lambda_out = lambda;
    return tilted(lambda);
  }
  if (!zero_in_relative_interior(increments, k, dim)) {
    throw ArbitrageError("martingale_projection: no equivalent one-step martingale measure");
  }
  const double scale = max_abs(increments);

  if (dim == 1) {
    // bracketed Newton on the increasing moment map F(l) = E_l[dS]
    auto moment = [&](double l, double* var) {
      std::array<double, 1> lam{l};
      const auto q = tilted(lam);
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        m1 += q[i] * increments[i];
        m2 += q[i] * increments[i] * increments[i];
      }
      if (var) *var = m2 - m1 * m1;
      return m1;
    };
    double lo = -1.0 / scale, hi = 1.0 / scale;
    while (moment(lo, nullptr) > 0.0) lo *= 2.0;
    while (moment(hi, nullptr) < 0.0) hi *= 2.0;
    double l = 0.0;
    if (l <= lo || l >= hi) l = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
      double var = 0.0;
      const double f = moment(l, &var);
      if (std::abs(f) <= 1e-14 * scale) break;
      if (f > 0.0) hi = l; else lo = l;
      double next = var > 0.0 ? l - f / var : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo <= 1e-300 || next == l) break;
      l = next;
    }
    lambda[0] = l;
  } else {
    // Newton on the moment equation with residual backtracking
    const Eigen::Index d = static_cast<Eigen::Index>(dim);
    Eigen::Map<const RowMatrix> S(increments.data(), static_cast<Eigen::Index>(k), d);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(d);
    auto residual = [&](const Eigen::VectorXd& l, Eigen::VectorXd& mean, Eigen::MatrixXd* cov) {
      const auto q = tilted(std::span<const double>(l.data(), dim));
      Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(k));
      mean = S.transpose() * qv;
      if (cov) *cov = S.transpose() * qv.asDiagonal() * S - mean * mean.transpose();
      return mean.norm();
    };
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double r = residual(lam, mean, &cov);
    for (int it = 0; it < 200 && r > 1e-14 * scale; ++it) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
      const double top = eig.eigenvalues().maxCoeff();
      Eigen::VectorXd step = Eigen::VectorXd::Zero(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double ev = eig.eigenvalues()(j);
        if (ev > 1e-14 * top) {
          const Eigen::VectorXd u = eig.eigenvectors().col(j);
          step -= (u.dot(mean) / ev) * u;
        }
      }
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::VectorXd m2;
        const double r2 = residual(lam + t * step, m2, nullptr);
        if (r2 < r) {
          lam += t * step;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      r = residual(lam, mean, &cov);
    }
    for (std::size_t j = 0; j < dim; ++j) lambda[j] = lam(static_cast<Eigen::Index>(j));
  }
  if (lambda_out) *lambda_out = lambda;
  return tilted(lambda);
}

double relative_entropy(const EventTree& tree, std::span<const double> q, std::span<const double> base) {
  if (q.size() != tree.edge_count() || base.size() != tree.edge_count()) {
    throw ContractViolation("relative_entropy: per-edge size mismatch");
  }
  std::vector<double> reach(tree.size(), 0.0);
  reach[tree.root()] = 1.0;
  double h = 0.0;
  for (NodeId v : tree.order()) {
    const auto kids = tree.children(v);
    const EdgeId e0 = tree.first_edge(v);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const double qe = q[e0 + i];
      reach[kids[i]] += reach[v] * qe;
      if (qe > 0.0) h += reach[v] * qe * std::log(qe / base[e0 + i]);
    }
  }
  return h;
}

double martingale_defect(const EventTree& tree, std::span<const double> q) {
  double worst = 0.0;
  const std::size_t dim = tree.dim();
  for (NodeId v = 0; v < tree.size(); ++v) {
    const auto inc = tree.increments(v);
    const EdgeId e0 = tree.first_edge(v);
    for (std::size_t j = 0; j < dim; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < tree.branch_count(v); ++i) m += q[e0 + i] * inc[i * dim + j];
      worst = std::max(worst, std::abs(m));
    }
  }
  return worst;
}

MartingaleMeasure make_measure(const EventTree& tree, std::vector<double> transition_prob,
                               std::span<const double> base_edge_probs) {
  if (transition_prob.size() != tree.edge_count()) throw ContractViolation("make_measure: per-edge size mismatch");
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (tree.is_terminal(v)) continue;
    double sum = 0.0;
    for (double q : std::span<const double>(transition_prob).subspan(tree.first_edge(v), tree.branch_count(v))) {
      if (!(q > 0.0)) throw ContractViolation("make_measure: measure is not equivalent (zero weight)");
      sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw ContractViolation("make_measure: weights do not sum to one");
  }
  double scale = 0.0;
  for (NodeId v = 0; v < tree.size(); ++v) scale = std::max(scale, max_abs(tree.increments(v)));
  if (martingale_defect(tree, transition_prob) > 1e-10 * std::max(1.0, scale)) {
    throw ContractViolation("make_measure: weights violate the martingale condition");
  }
  MartingaleMeasure m{tree, std::move(transition_prob), std::vector<double>(tree.size() * tree.dim(), 0.0),
                      std::vector<double>(tree.size(), 0.0), {}, 0.0};
  m.relative_entropy = relative_entropy(tree, m.transition_prob, base_edge_probs);
  if (!tree.recombining()) {
    std::vector<double> dens(tree.size(), 1.0);
    for (NodeId v : tree.order()) {
      if (v == tree.root()) continue;
      const EdgeId e = tree.in_edge(v);
      dens[v] = dens[tree.parent(v)] * m.transition_prob[e] / base_edge_probs[e];
    }
    m.density_to_base.reserve(tree.terminals().size());
    for (NodeId leaf : tree.terminals()) m.density_to_base.push_back(dens[leaf]);
  }
  return m;
}

MartingaleMeasure emmm(const EventTree& tree, std::span<const double> base) {
  if (base.size() != tree.edge_count()) throw ContractViolation("emmm: per-edge size mismatch");
  const std::size_t dim = tree.dim();
  std::vector<double> q(tree.edge_count());
  std::vector<double> lambda(tree.size() * dim, 0.0);
  std::vector<double> J(tree.size(), 0.0);
  std::vector<double> r;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) continue;
    const auto kids = tree.children(v);
    const EdgeId e0 = tree.first_edge(v);
    // q_i ~ p_i exp(-J_i + lambda . dS_i); shift J for stability
    double jmin = std::numeric_limits<double>::infinity();
    for (NodeId c : kids) jmin = std::min(jmin, J[c]);
    r.resize(kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) r[i] = base[e0 + i] * std::exp(-(J[kids[i]] - jmin));
    std::vector<double> lam;
    const auto qv = martingale_projection(r, tree.increments(v), dim, &lam);
    std::copy(qv.begin(), qv.end(), q.begin() + e0);
    std::copy(lam.begin(), lam.end(), lambda.begin() + std::size_t{v} * dim);
    // J_v = sum_i q_i (log(q_i / p_i) + J_i)
    double jv = 0.0;
    for (std::size_t i = 0; i < kids.size(); ++i) jv += qv[i] * (std::log(qv[i] / base[e0 + i]) + J[kids[i]]);
    J[v] = jv;
  }
  MartingaleMeasure m = make_measure(tree, std::move(q), base);
  m.lambda = std::move(lambda);
  m.entropy_to_go = std::move(J);
  return m;
}

MartingaleMeasure emmm(const EventTree& tree) { return emmm(tree, tree.edge_probs()); }

MartingaleMeasure emmm(const TiltedTree& tilted) { return emmm(tilted.base, tilted.tilted_prob); }

MartingaleMeasure sample_martingale_measure(const EventTree& tree, std::span<const double> center,
                                            std::span<const double> base, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> q(tree.edge_count());
  std::vector<double> r;
  for (NodeId v : tree.order()) {
    if (tree.is_terminal(v)) continue;
    const EdgeId e0 = tree.first_edge(v);
    const std::size_t k = tree.branch_count(v);
    r.resize(k);
    for (std::size_t i = 0; i < k; ++i) r[i] = center[e0 + i] * std::exp(scale * noise(rng));
    const auto qv = martingale_projection(r, tree.increments(v), tree.dim());
    std::copy(qv.begin(), qv.end(), q.begin() + e0);
  }
  return make_measure(tree, std::move(q), base);
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd moment_matrix(const EventTree& tree, NodeId v) {
  const std::size_t k = tree.branch_count(v), dim = tree.dim();
  const auto inc = tree.increments(v);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(dim + 1), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < dim; ++j) M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = inc[i * dim + j];
    M(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return M;
}

}  // namespace

std::size_t martingale_freedom(const EventTree& tree, NodeId v) {
  if (tree.is_terminal(v)) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(moment_matrix(tree, v));
  lu.setThreshold(1e-12);
  return tree.branch_count(v) - static_cast<std::size_t>(lu.rank());
}

bool is_complete(const EventTree& tree) {
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (!tree.is_terminal(v) && martingale_freedom(tree, v) != 0) return false;
  }
  return true;
}

MartingaleMeasure complete_market_measure(const EventTree& tree) {
  std::vector<double> q(tree.edge_count());
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (tree.is_terminal(v)) continue;
    if (martingale_freedom(tree, v) != 0) {
      throw ModelError("market is incomplete at node " + std::to_string(v));
    }
    const Eigen::MatrixXd M = moment_matrix(tree, v);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
    rhs(M.rows() - 1) = 1.0;
    const Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
    for (Eigen::Index i = 0; i < sol.size(); ++i) {
      if (!(sol(i) > 0.0)) throw ModelError("complete market admits arbitrage at node " + std::to_string(v));
      q[tree.first_edge(v) + static_cast<std::size_t>(i)] = sol(i);
    }
  }
  return make_measure(tree, std::move(q), tree.edge_probs());
}

// ---------------------------------------------------------------------------

double indirect_certainty_equivalent(const EventTree& tree, const Agent& agent, const TerminalClaim& claim) {
  agent.validate();
  require_same_tree(tree, claim.tree(), "utility_indirect");
  require_same_tree(tree, agent.endowment.tree(), "utility_indirect");
  std::vector<double> ce(tree.size(), 0.0);
  std::vector<double> vals;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      ce[v] = agent.endowment.at(v) + claim.at(v);
      continue;
    }
    const auto kids = tree.children(v);
    vals.resize(kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) vals[i] = ce[kids[i]];
    ce[v] = one_step_certainty_equivalent(tree.probs(v), tree.increments(v), tree.dim(), vals, agent.risk_aversion);
  }
  return ce[tree.root()];
}

double utility_indirect(const EventTree& tree, const Agent& agent, const TerminalClaim& claim) {
  return -std::exp(-agent.risk_aversion * indirect_certainty_equivalent(tree, agent, claim));
}

void write_measure_diagnostics(std::ostream& os, const MartingaleMeasure& measure) {
  const EventTree& tree = measure.tree;
  const std::size_t dim = tree.dim();
  std::size_t kmax = 0;
  for (NodeId v = 0; v < tree.size(); ++v) kmax = std::max(kmax, tree.branch_count(v));
  os << "node,time";
  for (std::size_t j = 0; j < dim; ++j) os << ",lambda_" << j + 1;
  for (std::size_t j = 0; j < dim; ++j) os << ",theta_" << j + 1;
  for (std::size_t i = 0; i < kmax; ++i) os << ",w_" << i + 1;
  os << '\n';
  std::ostringstream line;
  line.precision(17);
  for (NodeId v : tree.order()) {
    if (tree.is_terminal(v)) continue;
    line.str({});
    line << v << ',' << tree.time_index(v);
    for (std::size_t j = 0; j < dim; ++j) line << ',' << measure.lambda[std::size_t{v} * dim + j];
    for (std::size_t j = 0; j < dim; ++j) line << ',' << -measure.lambda[std::size_t{v} * dim + j];
    const auto w = measure.probs(v);
    for (std::size_t i = 0; i < kmax; ++i) {
      line << ',';
      if (i < w.size()) line << w[i];
    }
    os << line.str() << '\n';
  }
}

}  // namespace gccsolver
