#include "orbseg/util.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "orbseg/config_text.hpp"
#include "orbseg/error.hpp"
#include "orbseg/parallel.hpp"

namespace orbseg {
namespace {

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Rng, UniformStaysInUnitIntervalAndBelowIsUnbiased) {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[rng.below(7)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(OrderedBlockSum, IndependentOfThreadCount) {
  const std::size_t n = 5 * kReductionBlock + 17;
  auto term = [](std::size_t i) { return std::sin(double(i)) * 1e-3 + 1.0 / double(i + 1); };
  set_thread_count(1);
  const double one = ordered_block_sum(n, term);
  set_thread_count(3);
  const double three = ordered_block_sum(n, term);
  set_thread_count(0);
  EXPECT_EQ(one, three);
}

TEST(ConfigText, ParsesKeyValueLinesWithComments) {
  const auto entries = parse_config_text("# header\n a = 1 \n\nb=two words # trailing\n", "cfg");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].key, "a");
  EXPECT_EQ(entries[0].value, "1");
  EXPECT_EQ(entries[1].value, "two words");
  EXPECT_EQ(entries[1].line, 4);
  EXPECT_THROW(parse_config_text("novalue\n", "cfg"), ConfigError);
}

TEST(ConfigText, NumberParsingReportsContext) {
  EXPECT_EQ(parse_doubles("1, 2\t3", "cfg", 1), (std::vector<double>{1, 2, 3}));
  try {
    parse_double("1.5x", "cfg", 7);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg:7: ", 0), 0u) << e.what();
  }
  EXPECT_THROW(parse_int("2.5", "cfg", 1), ConfigError);
}

}  // namespace
}  // namespace orbseg
