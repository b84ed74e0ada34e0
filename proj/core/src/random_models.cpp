#include "gccsolver/random_models.hpp"

#include <array>

namespace gccsolver {

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

namespace {

template <class Branches>
EventTree grow(int steps, std::size_t arity, Branches branches) {
  EventTree::Builder b(1, 1.0 * steps);
  std::vector<NodeId> frontier{b.add_node(0)};
  std::array<double, 3> p{}, s{};
  for (int t = 0; t < steps; ++t) {
    std::vector<NodeId> next;
    next.reserve(frontier.size() * arity);
    for (NodeId v : frontier) {
      branches(p, s);
      for (std::size_t i = 0; i < arity; ++i) {
        const NodeId c = b.add_node(t + 1);
        b.add_branch(v, c, p[i], std::span<const double>(&s[i], 1));
        next.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  return std::move(b).build();
}

}  // namespace

EventTree random_incomplete_tree(std::mt19937_64& rng, int steps) {
  std::uniform_real_distribution<double> weight(0.2, 1.0), move(0.2, 1.5), mid(-0.3, 0.3);
  return grow(steps, 3, [&](std::array<double, 3>& p, std::array<double, 3>& s) {
    const double w0 = weight(rng), w1 = weight(rng), w2 = weight(rng);
    const double sum = w0 + w1 + w2;
    p = {w0 / sum, w1 / sum, 1.0 - w0 / sum - w1 / sum};
    s = {move(rng), mid(rng), -move(rng)};
  });
}

EventTree random_complete_tree(std::mt19937_64& rng, int steps) {
  std::uniform_real_distribution<double> prob(0.2, 0.8), move(0.2, 1.5);
  return grow(steps, 2, [&](std::array<double, 3>& p, std::array<double, 3>& s) {
    const double q = prob(rng);
    p = {q, 1.0 - q, 0.0};
    s = {move(rng), -move(rng), 0.0};
  });
}

TerminalClaim random_claim(const EventTree& tree, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return TerminalClaim::from_function(tree, [&](NodeId) { return u(rng); });
}

AdaptedProcess random_process(const EventTree& tree, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return AdaptedProcess::from_function(tree, [&](NodeId) { return u(rng); });
}

double random_risk_aversion(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

StoppingRule random_rule(const EventTree& tree, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> marks(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) marks[v] = tree.is_terminal(v) || coin(rng);
  return StoppingRule(tree, std::move(marks));
}

TradingStrategy random_strategy(const EventTree& tree, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> h(tree.size() * tree.dim());
  for (double& x : h) x = u(rng);
  return TradingStrategy(tree, std::move(h));
}

}  // namespace gccsolver
