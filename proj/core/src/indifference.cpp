#include "gccsolver/indifference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gccsolver/errors.hpp"

namespace gccsolver {

namespace {

Agent checked(Agent agent) {
  agent.validate();
  return agent;
}

// Backward pass with a caller-supplied node rule; children are gathered into a
// reusable buffer.
template <class AtTerminal, class AtNode>
std::vector<double> backward(const EventTree& tree, AtTerminal at_terminal, AtNode at_node) {
  std::vector<double> out(tree.size(), 0.0);
  std::vector<double> kids;
  const auto order = tree.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (tree.is_terminal(v)) {
      out[v] = at_terminal(v);
      continue;
    }
    const auto ch = tree.children(v);
    kids.resize(ch.size());
    for (std::size_t i = 0; i < ch.size(); ++i) kids[i] = out[ch[i]];
    out[v] = at_node(v, std::span<const double>(kids));
  }
  return out;
}

}  // namespace

Valuer::Valuer(EventTree tree, Agent agent)
    : tree_(std::move(tree)),
      agent_(checked(std::move(agent))),
      tilted_(tilt_measure(tree_, agent_.endowment, agent_.risk_aversion)),
      measure_(emmm(tilted_)) {}

double Valuer::one_step(NodeId v, std::span<const double> child_values) const {
  // the pricing measure is a martingale measure, so a constant is worth itself
  if (std::all_of(child_values.begin(), child_values.end(), [&](double x) { return x == child_values[0]; })) {
    return child_values[0];
  }
  return one_step_certainty_equivalent(measure_.probs(v), tree_.increments(v), tree_.dim(), child_values,
                                       agent_.risk_aversion);
}

OneStepSolution Valuer::one_step_solution(NodeId v, std::span<const double> child_values) const {
  return one_step_ce(measure_.probs(v), tree_.increments(v), tree_.dim(), child_values, agent_.risk_aversion);
}

AdaptedProcess european_value_process(const Valuer& valuer, const TerminalClaim& H) {
  require_same_tree(valuer.tree(), H.tree(), "european_value_process");
  auto values = backward(
      valuer.tree(), [&](NodeId v) { return H.at(v); },
      [&](NodeId v, std::span<const double> kids) { return valuer.one_step(v, kids); });
  return AdaptedProcess(valuer.tree(), std::move(values));
}

double value_at(const Valuer& valuer, const TerminalClaim& H) {
  return european_value_process(valuer, H)[valuer.tree().root()];
}

AdaptedProcess stopped_value_process(const Valuer& valuer, const AdaptedProcess& L, const StoppingRule& rule) {
  require_same_tree(valuer.tree(), L.tree(), "stopped_value_process");
  require_same_tree(valuer.tree(), rule.tree(), "stopped_value_process");
  auto values = backward(
      valuer.tree(), [&](NodeId v) { return L[v]; },
      [&](NodeId v, std::span<const double> kids) { return rule.marked(v) ? L[v] : valuer.one_step(v, kids); });
  return AdaptedProcess(valuer.tree(), std::move(values));
}

double value_at(const Valuer& valuer, const AdaptedProcess& L, const StoppingRule& rule) {
  return stopped_value_process(valuer, L, rule)[valuer.tree().root()];
}

AdaptedProcess expectation_process(const MartingaleMeasure& Q, const TerminalClaim& H) {
  require_same_tree(Q.tree, H.tree(), "expectation_process");
  auto values = backward(
      Q.tree, [&](NodeId v) { return H.at(v); },
      [&](NodeId v, std::span<const double> kids) {
        const auto q = Q.probs(v);
        double m = 0.0;
        for (std::size_t i = 0; i < kids.size(); ++i) m += q[i] * kids[i];
        return m;
      });
  return AdaptedProcess(Q.tree, std::move(values));
}

double dual_gap(const Valuer& valuer, const TerminalClaim& H, const MartingaleMeasure& Q) {
  require_same_tree(valuer.tree(), Q.tree, "dual_gap");
  require_same_tree(valuer.tree(), H.tree(), "dual_gap");
  const auto& base = valuer.tilted().tilted_prob;
  const double hq = relative_entropy(valuer.tree(), Q.transition_prob, base);
  const double he = relative_entropy(valuer.tree(), valuer.pricing_measure().transition_prob, base);
  const double eq = expectation_process(Q, H)[valuer.tree().root()];
  return eq + (hq - he) / valuer.alpha() - value_at(valuer, H);
}

MartingaleMeasure optimal_dual_measure(const Valuer& valuer, const TerminalClaim& H) {
  require_same_tree(valuer.tree(), H.tree(), "optimal_dual_measure");
  const EventTree& tree = valuer.tree();
  std::vector<double> q(tree.edge_count(), 0.0);
  backward(
      tree, [&](NodeId v) { return H.at(v); },
      [&](NodeId v, std::span<const double> kids) {
        auto sol = valuer.one_step_solution(v, kids);
        std::copy(sol.dual_weights.begin(), sol.dual_weights.end(), q.begin() + tree.first_edge(v));
        return sol.certainty_equivalent;
      });
  return make_measure(tree, std::move(q), valuer.tilted().tilted_prob);
}

double endowment_identity_check(const EventTree& tree, double alpha, const TerminalClaim& C,
                                const TerminalClaim& H) {
  const Valuer with_c(tree, Agent{alpha, C});
  const Valuer plain(tree, Agent::without_endowment(tree, alpha));
  const auto lhs = european_value_process(with_c, H);
  const auto a = european_value_process(plain, C + H);
  const auto b = european_value_process(plain, C);
  double worst = 0.0;
  for (NodeId v = 0; v < tree.size(); ++v) worst = std::max(worst, std::abs(lhs[v] - (a[v] - b[v])));
  return worst;
}

AdaptedProcess primal_value_process(const EventTree& tree, const Agent& agent, const TerminalClaim& H) {
  agent.validate();
  require_same_tree(tree, H.tree(), "primal_value_process");
  require_same_tree(tree, agent.endowment.tree(), "primal_value_process");
  auto ce_under_p = [&](const TerminalClaim& terminal) {
    return backward(
        tree, [&](NodeId v) { return terminal.at(v); },
        [&](NodeId v, std::span<const double> kids) {
          return one_step_certainty_equivalent(tree.probs(v), tree.increments(v), tree.dim(), kids,
                                               agent.risk_aversion);
        });
  };
  const auto with_claim = ce_under_p(agent.endowment + H);
  const auto without = ce_under_p(agent.endowment);
  std::vector<double> diff(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) diff[v] = with_claim[v] - without[v];
  return AdaptedProcess(tree, std::move(diff));
}

void write_value_csv(std::ostream& os, const AdaptedProcess& values) {
  const auto precision = os.precision(17);
  os << "node,time,value\n";
  const EventTree& tree = values.tree();
  for (NodeId v : tree.order()) os << v << ',' << tree.time(v) << ',' << values[v] << '\n';
  os.precision(precision);
}

}  // namespace gccsolver
