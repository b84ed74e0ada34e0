#include <gtest/gtest.h>

#include <sstream>

#include "gccsolver/errors.hpp"
#include "gccsolver/model_io.hpp"
#include "gccsolver/random_models.hpp"

namespace gccsolver {
namespace {

ModelFile sample_model() {
  const auto m = build_incomplete_trinomial(2, 1.0, 1.0, 0.5, CorrelationPattern::kSkewed);
  ModelFile f{m.tree, {}, {}};
  f.processes.emplace("S", m.traded);
  f.processes.emplace("U", m.untraded);
  f.claims.emplace("H", TerminalClaim::from_process(m.untraded) * 2.0);
  return f;
}

TEST(ModelIo, RoundTripIsExact) {
  const auto f = sample_model();
  std::stringstream ss;
  write_model(ss, f);
  const auto g = read_model(ss);
  ASSERT_EQ(g.tree.size(), f.tree.size());
  EXPECT_EQ(g.tree.dim(), 1u);
  for (NodeId v = 0; v < f.tree.size(); ++v) {
    EXPECT_EQ(g.process("U")[v], f.process("U")[v]);
    EXPECT_EQ(g.tree.time_index(v), f.tree.time_index(v));
  }
  for (std::size_t e = 0; e < f.tree.edge_count(); ++e) EXPECT_EQ(g.tree.edge_probs()[e], f.tree.edge_probs()[e]);
  const auto a = f.claim("H").values(), b = g.claim("H").values();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_THROW(g.process("nope"), ModelError);
}

TEST(ModelIo, RejectsMalformedInput) {
  const char* bad[] = {
      "not json",
      "[]",
      R"({"schema":"other","dim":0,"horizon_years":1,"nodes":[{"id":0,"time":0}]})",
      R"({"schema":"gccsolver-model-v1","dim":0,"horizon_years":1})",
      // probabilities do not sum to one
      R"({"schema":"gccsolver-model-v1","dim":0,"horizon_years":1,"nodes":[
          {"id":0,"time":0},{"id":1,"time":1,"parent":0,"prob":0.6},{"id":2,"time":1,"parent":0,"prob":0.5}]})",
      // arbitrage
      R"({"schema":"gccsolver-model-v1","dim":1,"horizon_years":1,"nodes":[
          {"id":0,"time":0},{"id":1,"time":1,"parent":0,"prob":0.5,"dS":[1]},
          {"id":2,"time":1,"parent":0,"prob":0.5,"dS":[2]}]})",
      // wrong process length
      R"({"schema":"gccsolver-model-v1","dim":0,"horizon_years":1,"nodes":[
          {"id":0,"time":0},{"id":1,"time":1,"parent":0,"prob":1.0}],
          "processes":[{"name":"X","values":[1]}]})",
      // duplicate id
      R"({"schema":"gccsolver-model-v1","dim":0,"horizon_years":1,"nodes":[{"id":0,"time":0},{"id":0,"time":1}]})",
  };
  for (const char* text : bad) {
    std::istringstream is(text);
    EXPECT_THROW(read_model(is), ModelError) << text;
  }
}

TEST(ModelIo, RulesRoundTrip) {
  const auto tree = build_binomial(3, 1.0, 0.0, 1.0, false).tree;
  std::mt19937_64 rng(4);
  const auto b = random_rule(tree, rng), s = random_rule(tree, rng);
  std::stringstream ss;
  write_rules(ss, b, s);
  const auto r = read_rules(ss, tree);
  ASSERT_TRUE(r.buyer && r.seller);
  EXPECT_TRUE(same_stopping_time(*r.buyer, b));
  EXPECT_TRUE(same_stopping_time(*r.seller, s));
  std::istringstream bad(R"({"buyer":[999]})");
  EXPECT_THROW(read_rules(bad, tree), ModelError);
}

}  // namespace
}  // namespace gccsolver
