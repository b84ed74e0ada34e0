#include "gccsolver/snell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "gccsolver/errors.hpp"

namespace gccsolver {

namespace {

double continuation(const Valuer& valuer, NodeId v, const std::vector<double>& values, std::vector<double>& kids) {
  const auto ch = valuer.tree().children(v);
  kids.resize(ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) kids[i] = values[ch[i]];
  return valuer.one_step(v, kids);
}

}  // namespace

SnellResult snell_envelope(const Valuer& valuer, const AdaptedProcess& L, double hitting_tol) {
  require_same_tree(valuer.tree(), L.tree(), "snell_envelope");
  const EventTree& tree = valuer.tree();
  std::vector<double> V(tree.size());
  std::vector<double> kids;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    V[v] = tree.is_terminal(v) ? L[v] : std::max(L[v], continuation(valuer, v, V, kids));
  }
  AdaptedProcess envelope(tree, std::move(V));
  StoppingRule rule = hitting_rule(envelope, L, hitting_tol);
  const double root = envelope[tree.root()];
  return SnellResult{std::move(envelope), std::move(rule), root};
}

SnellResult snell_envelope(const Valuer& valuer, const AdaptedProcess& L) {
  return snell_envelope(valuer, L, default_hitting_tolerance(L));
}

double check_supermartingale(const Valuer& valuer, const SnellResult& result, std::span<const StoppingRule> rules) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& rule : rules) {
    const auto w = stopped_value_process(valuer, result.envelope, rule);
    for (NodeId v = 0; v < valuer.tree().size(); ++v) worst = std::max(worst, w[v] - result.envelope[v]);
  }
  return rules.empty() ? 0.0 : worst;
}

double recursion_residual(const Valuer& valuer, const AdaptedProcess& L, const SnellResult& result) {
  const EventTree& tree = valuer.tree();
  std::vector<double> V(result.envelope.values().begin(), result.envelope.values().end());
  std::vector<double> kids;
  double worst = 0.0;
  for (NodeId v = 0; v < tree.size(); ++v) {
    const double expected = tree.is_terminal(v) ? L[v] : std::max(L[v], continuation(valuer, v, V, kids));
    worst = std::max(worst, std::abs(V[v] - expected));
  }
  return worst;
}

bool restriction_check(const Valuer& valuer, const AdaptedProcess& L1, const AdaptedProcess& L2,
                       const StoppingRule& sigma) {
  require_same_tree(valuer.tree(), sigma.tree(), "restriction_check");
  const auto profile = stop_profile(sigma);
  const EventTree& tree = valuer.tree();
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (profile.status[v] != StopStatus::kLive && L1[v] != L2[v]) {
      throw ContractViolation("restriction_check: payoffs differ after the stopping time at node " +
                              std::to_string(v));
    }
  }
  const auto V1 = snell_envelope(valuer, L1).envelope;
  const auto V2 = snell_envelope(valuer, L2).envelope;
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (profile.status[v] != StopStatus::kLive && std::abs(V1[v] - V2[v]) > 1e-12) return false;
  }
  return true;
}

RatioRepresentation ratio_representation(const Valuer& valuer, const AdaptedProcess& L) {
  require_same_tree(valuer.tree(), L.tree(), "ratio_representation");
  const EventTree& tree = valuer.tree();
  const Agent& agent = valuer.agent();
  const double alpha = agent.risk_aversion;
  std::vector<double> ce_b(tree.size()), ce_a(tree.size());
  std::vector<double> kids;
  auto step = [&](NodeId v, const std::vector<double>& values) {
    const auto ch = tree.children(v);
    kids.resize(ch.size());
    for (std::size_t i = 0; i < ch.size(); ++i) kids[i] = values[ch[i]];
    return one_step_certainty_equivalent(tree.probs(v), tree.increments(v), tree.dim(), kids, alpha);
  };
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      ce_b[v] = agent.endowment.at(v);
      ce_a[v] = ce_b[v] + L[v];
      continue;
    }
    ce_b[v] = step(v, ce_b);
    // stop: take L_v in cash and keep trading against the endowment alone
    ce_a[v] = std::max(L[v] + ce_b[v], step(v, ce_a));
  }
  std::vector<double> A(tree.size()), B(tree.size()), ratio(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) {
    A[v] = -std::exp(-alpha * ce_a[v]);
    B[v] = -std::exp(-alpha * ce_b[v]);
    ratio[v] = ce_a[v] - ce_b[v];
  }
  double violation = 0.0;
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (tree.is_terminal(v)) continue;
    const auto ch = tree.children(v);
    const auto p = tree.probs(v);
    double ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < ch.size(); ++i) {
      ea += p[i] * A[ch[i]];
      eb += p[i] * B[ch[i]];
    }
    violation = std::max(violation, (ea - A[v]) / std::abs(A[v]));
    violation = std::max(violation, (eb - B[v]) / std::abs(B[v]));
  }
  return RatioRepresentation{AdaptedProcess(tree, std::move(A)), AdaptedProcess(tree, std::move(B)),
                             AdaptedProcess(tree, std::move(ratio)), violation};
}

void write_snell_csv(std::ostream& os, const AdaptedProcess& L, const SnellResult& result) {
  const auto precision = os.precision(17);
  os << "node,time,L,V,stop\n";
  const EventTree& tree = L.tree();
  for (NodeId v : tree.order()) {
    os << v << ',' << tree.time(v) << ',' << L[v] << ',' << result.envelope[v] << ','
       << (result.optimal_rule.marked(v) ? 1 : 0) << '\n';
  }
  os.precision(precision);
}

}  // namespace gccsolver
