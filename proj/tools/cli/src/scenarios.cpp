#include "gccsolver_cli/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gccsolver/errors.hpp"
#include "gccsolver/model_io.hpp"
#include "gccsolver_cli/expression.hpp"

namespace gccsolver::cli {

namespace {

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

const char* yes_no(bool b) { return b ? "yes" : "NO"; }

template <class T>
T pick(const std::optional<T>& flag, T fallback) {
  return flag ? *flag : fallback;
}

Layout pick_layout(const RunConfig& c, int steps) {
  if (c.layout) return *c.layout;
  return steps > 18 ? Layout::kRecombining : Layout::kFullTree;
}

Problem make(std::string source, EventTree tree) {
  Problem p{std::move(source), {}, std::move(tree), {}, {}, {}, {}, {}, {}, "0", "0", 1.0, 1.0};
  return p;
}

void add_walk(Problem& p, const BinomialModel& m) { p.drivers.emplace("W", m.W); }

// Drifted walk: X = W + mu t, Y = X + delta; the seller (A) is more risk averse.
Problem example41(const RunConfig& c, bool case2) {
  const int steps = pick(c.steps, 10);
  const double mu = pick(c.mu, 0.5), delta = pick(c.delta, 0.5);
  const double aa = pick(c.alpha_a, 2.0), ab = pick(c.alpha_b, 0.5);
  const BinomialModel m = build_binomial(steps, 1.0, 0.0, 1.0, false, pick_layout(c, steps));
  Problem p = make(case2 ? "example41-case2" : "example41-case1", m.tree);
  add_walk(p, m);
  const std::string drifted = "W + " + num(mu) + "*t";
  p.x = drifted;
  p.y = drifted + " + " + num(delta);
  p.claim = p.payoff = p.x;
  p.alpha_a = aa;
  p.alpha_b = ab;
  p.endowment_a = case2 ? drifted : "0";

  const double T = m.tree.horizon();
  std::ostringstream d;
  d << p.source << ": symmetric binomial walk W, " << steps << " steps over T = " << num(T) << " ("
    << (m.tree.recombining() ? "recombining lattice" : "full tree") << ")\n"
    << "  X = " << p.x << ", Y = " << p.y << ", no traded asset\n"
    << "  buyer alpha_B = " << num(ab) << ", seller alpha_A = " << num(aa) << ", mu = " << num(mu)
    << ", delta = " << num(delta) << "\n"
    << "  seller endowment C_A = " << p.endowment_a << " (at T)\n"
    << "  alpha_B/2 < mu < alpha_A/2: " << yes_no(ab / 2 < mu && mu < aa / 2) << "\n"
    << "  0 < delta < (alpha_A/2 + mu) T: " << yes_no(0 < delta && delta < (aa / 2 + mu) * T) << "\n"
    << "  expected equilibrium: "
    << (case2 ? "both rules stop at maturity" : "seller recalls at the root, buyer waits until maturity") << "\n";
  p.description = d.str();
  return p;
}

// Driftless walk: X = W, Y = W + delta; equilibria depend on who moves first.
Problem example43(const RunConfig& c) {
  const int steps = pick(c.steps, 3);
  const double delta = pick(c.delta, 0.5);
  const double aa = pick(c.alpha_a, 2.0), ab = pick(c.alpha_b, 1.0);
  const BinomialModel m = build_binomial(steps, 1.0, 0.0, 1.0, false, pick_layout(c, steps));
  Problem p = make("example43", m.tree);
  add_walk(p, m);
  p.x = p.claim = p.payoff = "W";
  p.y = "W + " + num(delta);
  p.alpha_a = aa;
  p.alpha_b = ab;
  const double T = m.tree.horizon();
  std::ostringstream d;
  d << "example43: symmetric binomial walk W, " << steps << " steps over T = " << num(T) << "\n"
    << "  X = W, Y = " << p.y << ", alpha_A = " << num(aa) << ", alpha_B = " << num(ab) << "\n"
    << "  0 < delta < (alpha_A/2) T: " << yes_no(0 < delta && delta < aa / 2 * T) << "\n"
    << "  expected equilibria: (0, T) when the buyer moves first, (T, 0) when the seller does\n";
  p.description = d.str();
  return p;
}

// No hedging instrument; A is the event "first branch at time 1".
Problem note33(const RunConfig& c) {
  const int steps = pick(c.steps, 1);
  const double n = pick(c.n, 5.0), pa = pick(c.prob_a, 0.3);
  if (steps < 1) throw ModelError("note33 needs at least one step");
  if (!(pa > 0.0 && pa < 1.0)) throw ModelError("note33: P[A] must lie in (0, 1)");
  EventTree::Builder b(0, 1.0 * steps);
  std::vector<NodeId> frontier{b.add_node(0)};
  std::vector<double> in_a{0.0};
  for (int t = 0; t < steps; ++t) {
    std::vector<NodeId> next;
    for (NodeId v : frontier) {
      const double probs[2] = {t == 0 ? pa : 0.5, t == 0 ? 1.0 - pa : 0.5};
      for (int i = 0; i < 2; ++i) {
        const NodeId u = b.add_node(t + 1);
        b.add_branch(v, u, probs[i], {});
        in_a.push_back(t == 0 ? (i == 0 ? 1.0 : 0.0) : in_a[v]);
        next.push_back(u);
      }
    }
    frontier = std::move(next);
  }
  EventTree tree = std::move(b).build();
  Problem p = make("note33", tree);
  p.drivers.emplace("A", AdaptedProcess(tree, in_a));
  p.claim = p.payoff = p.x = p.y = num(n) + "*A";
  p.alpha_a = pick(c.alpha_a, 1.0);
  p.alpha_b = pick(c.alpha_b, 1.0);
  const double a = p.alpha_b;
  std::ostringstream d;
  d << "note33: no traded asset, " << steps << " step(s), P[A] = " << num(pa) << ", claim H = " << p.claim << "\n"
    << "  alpha = " << num(a) << " (buyer)\n"
    << "  closed form pi_0 = " << num(-std::log(std::exp(-a * n) * pa + 1.0 - pa) / a)
    << ", uniform bound -log(1-P[A])/alpha = " << num(-std::log(1.0 - pa) / a) << "\n";
  p.description = d.str();
  return p;
}

Problem constant_scenario(const RunConfig& c) {
  const int steps = pick(c.steps, 3);
  TrinomialModel m = build_incomplete_trinomial(steps, 1.0, 1.0, 1.0, CorrelationPattern::kPartial);
  Problem p = make("constant", m.tree);
  p.drivers.emplace("S", m.traded);
  p.drivers.emplace("U", m.untraded);
  p.claim = p.payoff = p.x = p.y = "3";
  p.alpha_a = pick(c.alpha_a, 1.0);
  p.alpha_b = pick(c.alpha_b, 1.0);
  p.description = "constant: incomplete trinomial tree (traded S, untraded U), " + std::to_string(steps) +
                  " steps, every payoff identically 3\n";
  return p;
}

// Complete market: the walk itself is traded, S = 1 + W.
Problem put_scenario(const RunConfig& c) {
  const int steps = pick(c.steps, 6);
  const double K = pick(c.strike, 1.0), delta = pick(c.delta, 0.1);
  const BinomialModel m = build_binomial(steps, 1.0, 0.0, 0.2, true, pick_layout(c, steps));
  Problem p = make("put", m.tree);
  add_walk(p, m);
  p.drivers.emplace("S", AdaptedProcess::from_function(m.tree, [&](NodeId v) { return 1.0 + m.W[v]; }));
  p.drivers.emplace("put", AdaptedProcess::from_function(m.tree, [&](NodeId v) {
                      return std::max(K - 1.0 - m.W[v], 0.0);
                    }));
  p.claim = p.payoff = p.x = "put";
  p.y = "put + " + num(delta);
  p.alpha_a = pick(c.alpha_a, 1.0);
  p.alpha_b = pick(c.alpha_b, 1.0);
  p.description = "put: complete binomial market, traded S = 1 + W (vol 0.2), " + std::to_string(steps) +
                  " steps, put payoff max(" + num(K) + " - S, 0), recall payoff Y = " + p.y + "\n";
  return p;
}

Problem from_model(const RunConfig& c) {
  ModelFile file = load_model(*c.model);
  Problem p = make(c.model->string(), file.tree);
  p.drivers = std::move(file.processes);
  p.claims = std::move(file.claims);
  const auto has = [&](const std::string& name) { return p.drivers.count(name) || p.claims.count(name); };
  p.claim = has("H") ? "H" : "";
  p.payoff = has("L") ? "L" : "";
  p.x = has("X") ? "X" : "";
  p.y = has("Y") ? "Y" : "";
  p.alpha_a = pick(c.alpha_a, 1.0);
  p.alpha_b = pick(c.alpha_b, 1.0);
  std::ostringstream d;
  d << "model " << p.source << ": " << p.tree.size() << " nodes, " << p.tree.steps() << " steps, " << p.tree.dim()
    << " traded asset(s)\n  drivers:";
  for (const auto& [name, proc] : p.drivers) d << ' ' << name;
  for (const auto& [name, claim] : p.claims) d << ' ' << name << "(terminal)";
  d << '\n';
  p.description = d.str();
  return p;
}

std::optional<double> lookup(const Problem& p, const std::string& name, NodeId v) {
  if (name == "t") return p.tree.time(v);
  if (auto it = p.drivers.find(name); it != p.drivers.end()) return it->second[v];
  if (p.tree.is_terminal(v)) {
    if (auto it = p.claims.find(name); it != p.claims.end()) return it->second.at(v);
  }
  return std::nullopt;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> catalog{
      {"note33", "claim n on an event A without hedging; closed-form value"},
      {"example41-case1", "drifted walk, seller without endowment: seller recalls at once"},
      {"example41-case2", "drifted walk, seller endowed with W_T + mu T: settled at maturity"},
      {"example43", "driftless walk with penalty delta: two equilibria by first mover"},
      {"constant", "every payoff identically 3 on an incomplete trinomial tree"},
      {"put", "American put and its game version on a complete binomial market"},
  };
  return catalog;
}

AdaptedProcess Problem::process(const std::string& expr) const {
  if (expr.empty()) throw ModelError("no payoff process configured for " + source);
  const AffineExpr e = parse_affine(expr);
  for (const auto& name : e.drivers()) {
    if (name != "t" && !drivers.count(name)) {
      throw ModelError("unknown driver \"" + name + "\" in \"" + expr + "\"" +
                       (claims.count(name) ? " (terminal claims are only usable at maturity)" : ""));
    }
  }
  return AdaptedProcess::from_function(tree, [&](NodeId v) {
    return e.evaluate([&](const std::string& name) { return lookup(*this, name, v); });
  });
}

TerminalClaim Problem::terminal(const std::string& expr) const {
  if (expr.empty()) throw ModelError("no terminal claim configured for " + source);
  const AffineExpr e = parse_affine(expr);
  for (const auto& name : e.drivers()) {
    if (name != "t" && !drivers.count(name) && !claims.count(name)) {
      throw ModelError("unknown driver \"" + name + "\" in \"" + expr + "\"");
    }
  }
  return TerminalClaim::from_function(tree, [&](NodeId v) {
    return e.evaluate([&](const std::string& name) { return lookup(*this, name, v); });
  });
}

Agent Problem::buyer() const {
  Agent a{alpha_b, terminal(endowment_b)};
  a.validate();
  return a;
}

Agent Problem::seller() const {
  Agent a{alpha_a, terminal(endowment_a)};
  a.validate();
  return a;
}

GccSpec Problem::gcc() const {
  GccSpec spec{process(x), process(y), buyer(), seller()};
  try {
    spec.validate();
  } catch (const ContractViolation& e) {
    throw ModelError(e.what());
  }
  return spec;
}

Problem build_problem(const RunConfig& c) {
  Problem p = [&] {
    if (c.model) return from_model(c);
    const std::string& s = *c.scenario;
    if (s == "note33") return note33(c);
    if (s == "example41-case1") return example41(c, false);
    if (s == "example41-case2") return example41(c, true);
    if (s == "example43") return example43(c);
    if (s == "constant") return constant_scenario(c);
    if (s == "put") return put_scenario(c);
    throw ModelError("unknown scenario \"" + s + "\"");
  }();
  if (c.x) p.x = *c.x;
  if (c.y) p.y = *c.y;
  if (c.payoff) p.payoff = *c.payoff;
  if (c.claim) p.claim = *c.claim;
  if (c.endowment_a) p.endowment_a = *c.endowment_a;
  if (c.endowment_b) p.endowment_b = *c.endowment_b;
  return p;
}

}  // namespace gccsolver::cli
