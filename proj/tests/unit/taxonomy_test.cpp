#include "orbseg/taxonomy.hpp"

#include <gtest/gtest.h>

#include <string>

#include "orbseg/error.hpp"

namespace orbseg {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_taxonomy(text, "test.conf");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(DefaultTaxonomy, HasElevenClassesWithBackgroundFirst) {
  const ClassTaxonomy t = default_taxonomy();
  EXPECT_EQ(t.size(), 11u);
  EXPECT_EQ(t.at(0).name, "background");
  EXPECT_EQ(t.at(0).role, RoleHint::background);
  EXPECT_EQ(t.background_index(), 0);
}

TEST(DefaultTaxonomy, NamesTheComponentsFromTheLiterature) {
  const ClassTaxonomy t = default_taxonomy();
  for (const char* name : {"main module", "solar panel", "sensor", "thruster", "parabolic reflector",
                           "launch vehicle adapter"}) {
    EXPECT_NO_THROW(t.index_of(name)) << name;
  }
}

TEST(DefaultTaxonomy, ColorLookupIsABijection) {
  const ClassTaxonomy t = default_taxonomy();
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto idx = static_cast<ClassIndex>(k);
    EXPECT_EQ(t.color_to_index(t.display_color(idx)), idx);
  }
  EXPECT_EQ(color_to_index(t, Rgb8{0, 0, 0}), 0);
  EXPECT_EQ(color_to_index(t, t.display_color(5)), 5);
}

TEST(DefaultTaxonomy, UnknownColorErrorNamesTheTriple) {
  const ClassTaxonomy t = default_taxonomy();
  try {
    t.color_to_index(Rgb8{1, 2, 3});
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("(1,2,3)"), std::string::npos) << e.what();
  }
}

TEST(DefaultTaxonomy, RoundTripsThroughConfigText) {
  const ClassTaxonomy t = default_taxonomy();
  EXPECT_EQ(parse_taxonomy(t.to_config_text(), "roundtrip"), t);
}

TEST(ParseTaxonomy, RejectsDuplicateColorWithLineContext) {
  const std::string msg = error_of(
      "class = 0 | background | 0 0 0 | background\n"
      "class = 1 | a | 10 10 10 | neutral\n"
      "class = 2 | b | 10 10 10 | neutral\n");
  EXPECT_NE(msg.find("duplicate display color"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.conf:3"), std::string::npos) << msg;
}

TEST(ParseTaxonomy, RejectsNonContiguousIndices) {
  const std::string msg = error_of(
      "class = 0 | background | 0 0 0 | background\n"
      "class = 1 | a | 10 10 10 | neutral\n"
      "class = 3 | b | 20 20 20 | neutral\n");
  EXPECT_NE(msg.find("non-contiguous indices"), std::string::npos) << msg;
  EXPECT_NE(msg.find("test.conf:3"), std::string::npos) << msg;
}

TEST(ParseTaxonomy, RejectsDuplicateNames) {
  const std::string msg = error_of(
      "class = 0 | background | 0 0 0 | background\n"
      "class = 1 | a | 10 10 10 | neutral\n"
      "class = 2 | a | 20 20 20 | neutral\n");
  EXPECT_NE(msg.find("duplicate class name"), std::string::npos) << msg;
}

TEST(ParseTaxonomy, RejectsMisplacedBackgroundAndTooFewClasses) {
  EXPECT_NE(error_of("class = 0 | background | 0 0 0 | background\n"), "");
  EXPECT_NE(error_of("class = 0 | space | 0 0 0 | neutral\nclass = 1 | a | 1 1 1 | neutral\n"), "");
  EXPECT_NE(error_of("class = 0 | background | 0 0 0 | background\nclass = 1 | a | 1 1 1 | background\n"), "");
}

TEST(ParseTaxonomy, RejectsMalformedRecords) {
  EXPECT_NE(error_of("class = 0 | background | 0 0 | background\n"), "");
  EXPECT_NE(error_of("class = 0 | background | 0 0 300 | background\n"), "");
  EXPECT_NE(error_of("colour = 0 | background | 0 0 0 | background\n"), "");
  EXPECT_NE(error_of("class = 0 | background | 0 0 0 | sometimes\n"), "");
}

TEST(ParseTaxonomy, AcceptsCustomTaxonomyInAnyLineOrder) {
  const ClassTaxonomy t = parse_taxonomy(
      "# two components\n"
      "class = 2 | panel | 0 0 255 | neutral\n"
      "class = 0 | background | 0 0 0 | background\n"
      "class = 1 | body | 255 0 0 | fixate\n",
      "custom");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.at(1).name, "body");
  EXPECT_EQ(t.at(1).role, RoleHint::fixate);
  EXPECT_EQ(t.index_of("panel"), 2);
  EXPECT_THROW(t.index_of("wing"), ConfigError);
}

}  // namespace
}  // namespace orbseg
