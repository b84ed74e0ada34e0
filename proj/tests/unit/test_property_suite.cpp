#include <gtest/gtest.h>

#include <sstream>

#include "gccsolver/property_suite.hpp"

namespace gccsolver {
namespace {

SuiteOptions small(std::uint64_t seed) {
  SuiteOptions o;
  o.seed = seed;
  o.trees = 8;
  o.dual_samples = 50;
  o.random_rules = 20;
  o.complete_trees = 4;
  return o;
}

TEST(PropertySuite, PassesOnSeveralSeeds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto rep = run_property_suite(small(seed));
    std::ostringstream os;
    print_suite_report(os, rep);
    EXPECT_TRUE(rep.ok()) << os.str();
    for (const char* g : {"valuation", "duality", "snell", "iteration", "complete"}) EXPECT_TRUE(rep.group_ok(g));
  }
}

TEST(PropertySuite, BiasedOperatorIsCaught) {
  auto o = small(1);
  o.valuation = biased_valuation(1e-3);
  const auto rep = run_property_suite(o);
  EXPECT_FALSE(rep.ok());
  EXPECT_FALSE(rep.find("boundedness").pass());
}

TEST(PropertySuite, DeterministicForASeed) {
  std::ostringstream a, b;
  print_suite_report(a, run_property_suite(small(5)));
  print_suite_report(b, run_property_suite(small(5)));
  EXPECT_EQ(a.str(), b.str());
}

}  // namespace
}  // namespace gccsolver
