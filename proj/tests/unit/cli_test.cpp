#include "orbseg/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "orbseg/config_text.hpp"
#include "orbseg/dataset.hpp"
#include "temp_dir.hpp"

namespace orbseg {
namespace {

namespace fs = std::filesystem;
using orbseg::testing::TempDir;

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t file_count(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(invoke({"mesh-demo", "--out", dir.file("meshes"), "--detail", "1", "--variants", "0", "1"}).code, 0);
  }
  std::vector<std::string> generate_args(const std::string& out) const {
    return {"generate", "--mesh", dir.file("meshes/observatory.obj"), "--mesh", dir.file("meshes/dish_probe.obj"),
            "--map", dir.file("meshes/classes.map"), "--unknown-target", "dish_probe", "--out", out,
            "--n-positions", "4", "--width", "24", "--height", "24", "--seed", "3"};
  }
  TempDir dir;
};

TEST_F(CliTest, MeshDemoWritesMeshesAndMap) {
  EXPECT_TRUE(fs::exists(dir.file("meshes/observatory.obj")));
  EXPECT_TRUE(fs::exists(dir.file("meshes/dish_probe.obj")));
  EXPECT_TRUE(fs::exists(dir.file("meshes/classes.map")));
}

TEST_F(CliTest, DryRunPrintsPlanAndWritesNothing) {
  std::vector<std::string> args = generate_args(dir.file("ds"));
  args.push_back("--dry-run");
  const Outcome o = invoke(args);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("# planned frames: 24"), std::string::npos) << o.out;
  EXPECT_NE(o.out.find("observatory/3_3\ttrain"), std::string::npos) << o.out;
  EXPECT_NE(o.out.find("dish_probe/0_1\tunknown_target"), std::string::npos) << o.out;
  EXPECT_EQ(file_count(dir.file("ds")), 0u);
}

TEST_F(CliTest, FullPipelineRuns) {
  const std::string ds = dir.file("ds");
  Outcome o = invoke(generate_args(ds));
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(file_count(ds), 24u * 2 + 1);

  o = invoke({"split", "--manifest", ds + "/manifest.tsv", "--train", "0.5", "--val", "0.25", "--test", "0.25"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("train 6, val 3, test 3, unknown_target 12"), std::string::npos) << o.out;

  o = invoke({"validate", "--manifest", ds + "/manifest.tsv"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("failures: 0"), std::string::npos);

  o = invoke({"train", "--manifest", ds + "/manifest.tsv", "--epochs", "2", "--model", dir.file("m.bin"), "--log",
              dir.file("log.tsv")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir.file("m.bin")));
  EXPECT_EQ(read_text_file(dir.file("log.tsv")).substr(0, 5), "epoch");

  o = invoke({"report", "--manifest", ds + "/manifest.tsv", "--model", dir.file("m.bin"), "--format", "csv"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.substr(0, o.out.find('\n')), "class,test,unknown_target");

  o = invoke({"augment", "--manifest", ds + "/manifest.tsv", "--out", dir.file("aug"), "--copies", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(read_manifest(dir.file("aug/manifest.tsv")).records.size(), 12u);
  EXPECT_EQ(invoke({"validate", "--manifest", dir.file("aug/manifest.tsv")}).code, 0);
}

TEST_F(CliTest, EvalOnIdenticalDirectoriesScoresOne) {
  const std::string ds = dir.file("ds");
  ASSERT_EQ(invoke(generate_args(ds)).code, 0);
  const std::string masks = ds + "/observatory/mask";
  const Outcome o = invoke({"eval", "--pred", masks, "--truth", masks, "--format", "tsv"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("macro\t1.0000\n"), std::string::npos) << o.out;
}

TEST_F(CliTest, DeletedMaskFailsValidation) {
  const std::string ds = dir.file("ds");
  ASSERT_EQ(invoke(generate_args(ds)).code, 0);
  fs::remove(ds + "/observatory/mask/2_1.png");
  const Outcome o = invoke({"validate", "--manifest", ds + "/manifest.tsv"});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(o.err.rfind("error: 1 validation failure(s)", 0), 0u) << o.err;
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsWin) {
  write_text_file(dir.file("run.ini"), "[generate]\nn-positions = 2\nwidth = 16\nheight = 16\n");
  std::vector<std::string> args{"--config", dir.file("run.ini")};
  for (const std::string& a : generate_args(dir.file("ds"))) {
    if (a != "--width" && a != "24" && a != "--height") args.push_back(a);  // leave size to the file
  }
  // generate_args passes --n-positions 4, which must override the file's 2.
  args.push_back("--dry-run");
  const Outcome o = invoke(args);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("# planned frames: 24"), std::string::npos) << o.out;
}

TEST(Cli, UnknownFlagIsAUsageError) {
  const Outcome o = invoke({"generate", "--bogus"});
  EXPECT_EQ(o.code, 2);
  EXPECT_EQ(o.err.rfind("error: ", 0), 0u);
  EXPECT_NE(o.err.find("Usage"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsAUsageError) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST(Cli, RuntimeFailureIsOneErrorLine) {
  TempDir dir;
  write_text_file(dir.file("bad.tsv"), "no header\n");
  const Outcome o = invoke({"split", "--manifest", dir.file("bad.tsv")});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(o.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(o.err.begin(), o.err.end(), '\n'), 1);
}

TEST(Cli, HelpDocumentsDefaults) {
  const Outcome gen = invoke({"generate", "--help"});
  EXPECT_EQ(gen.code, 0);
  EXPECT_NE(gen.out.find("[5000]"), std::string::npos) << gen.out;
  EXPECT_NE(gen.out.find("[1,2,3]"), std::string::npos) << gen.out;
  EXPECT_NE(gen.out.find("[2.5]"), std::string::npos) << gen.out;
  EXPECT_NE(gen.out.find("[45]"), std::string::npos) << gen.out;
  const Outcome tr = invoke({"train", "--help"});
  EXPECT_NE(tr.out.find("--gamma FLOAT [2]"), std::string::npos) << tr.out;
  EXPECT_NE(tr.out.find("--alpha FLOAT [1]"), std::string::npos) << tr.out;
  EXPECT_NE(tr.out.find("--lr FLOAT [0.5]"), std::string::npos) << tr.out;
  const Outcome aug = invoke({"augment", "--help"});
  EXPECT_NE(aug.out.find("--p-rotate FLOAT [0.4]"), std::string::npos) << aug.out;
}

}  // namespace
}  // namespace orbseg
