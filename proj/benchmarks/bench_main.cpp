#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "gccsolver/dynkin.hpp"
#include "gccsolver/exputil.hpp"
#include "gccsolver/indifference.hpp"
#include "gccsolver/lattice.hpp"
#include "gccsolver/random_models.hpp"
#include "gccsolver/snell.hpp"

using namespace gccsolver;

namespace {

void BM_OneStepBinary(benchmark::State& state) {
  const std::array<double, 2> p{0.4, 0.6};
  const std::array<double, 2> s{0.3, -0.2};
  const std::array<double, 2> v{1.5, -0.7};
  for (auto _ : state) benchmark::DoNotOptimize(one_step_certainty_equivalent(p, s, 1, v, 1.3));
}
BENCHMARK(BM_OneStepBinary);

void BM_OneStepTrinomialNewton(benchmark::State& state) {
  const std::array<double, 3> p{0.25, 0.35, 0.4};
  const std::array<double, 3> s{0.3, 0.05, -0.2};
  const std::array<double, 3> v{1.5, 0.2, -0.7};
  for (auto _ : state) benchmark::DoNotOptimize(one_step_certainty_equivalent(p, s, 1, v, 1.3));
}
BENCHMARK(BM_OneStepTrinomialNewton);

void BM_EuropeanIncomplete(benchmark::State& state) {
  auto rng = instance_rng(3, 0);
  const auto tree = random_incomplete_tree(rng, static_cast<int>(state.range(0)));
  const Valuer valuer(tree, Agent{1.0, random_claim(tree, rng)});
  const auto H = random_claim(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(value_at(valuer, H));
  state.counters["nodes"] = static_cast<double>(tree.size());
}
BENCHMARK(BM_EuropeanIncomplete)->Arg(4)->Arg(6)->Arg(8);

void BM_SnellEnvelope(benchmark::State& state) {
  auto rng = instance_rng(4, 0);
  const auto tree = random_incomplete_tree(rng, static_cast<int>(state.range(0)));
  const Valuer valuer(tree, Agent::without_endowment(tree, 0.8));
  const auto L = random_process(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(snell_envelope(valuer, L));
}
BENCHMARK(BM_SnellEnvelope)->Arg(4)->Arg(6)->Arg(8);

void BM_NashExample(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const auto m = build_binomial(steps, 1.0, 0.5, 1.0, false, steps > 18 ? Layout::kRecombining : Layout::kFullTree);
  const auto X = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return m.drifted[v]; });
  const auto Y = AdaptedProcess::from_function(m.tree, [&](NodeId v) { return m.drifted[v] + 0.5; });
  const GccGame game(GccSpec{X, Y, Agent::without_endowment(m.tree, 0.5), Agent::without_endowment(m.tree, 2.0)});
  for (auto _ : state) benchmark::DoNotOptimize(nash_iterate(game));
}
BENCHMARK(BM_NashExample)->Arg(10)->Arg(14)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
