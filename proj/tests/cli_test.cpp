/*
 * Copyright 2026 The ulcerseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ulcerseg/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "ulcerseg/dataset.hpp"
#include "ulcerseg/image_io.hpp"
#include "ulcerseg/pipeline.hpp"
#include "ulcerseg/slic.hpp"

namespace ulcerseg {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = RunCommand(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ulcerseg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

void ExpectSameFiles(const fs::path& a, const fs::path& b) {
  size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(ReadFile(entry.path().string()), ReadFile((b / rel).string())) << rel;
    ++files;
  }
  EXPECT_GT(files, 0u);
}

TEST_F(CliTest, SlicOnConstantImageWritesLosslessPartition) {
  WritePng(P("const.png"), RgbImage(110, 110, {120, 80, 60}));
  const auto r = Cli({"slic", P("const.png"), "-o", P("part.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "superpixels: 22\n");
  const auto map = ReadPartitionPng(P("part.png"));
  EXPECT_EQ(map.labels, Partition(RgbImage(110, 110, {120, 80, 60})).labels);
}

TEST_F(CliTest, DefaultCnnConfigHyperparameters) {
  const auto r = Cli({"train", P("none"), "--model", "cnn", "--dry-run"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["train"]["learning_rate"], 0.001);
  EXPECT_EQ(j["train"]["momentum"], 0.88);
  EXPECT_EQ(j["train"]["batch_size"], 24);
  EXPECT_EQ(j["train"]["patience"], 50);
  EXPECT_EQ(j["network"]["head"], "dense512,relu,dropout0.5,dense512,relu,dropout0.5,dense4");
}

TEST_F(CliTest, ConfigFileAppliesAndFlagsOverride) {
  WriteFileAtomic(P("c.ini"), "[train]\nlr = 0.01\nbatch = 8\nmax-epochs = 30\n");
  const auto r = Cli({"train", P("none"), "--model", "cnn", "--dry-run", "--config", P("c.ini"),
                      "--batch", "12"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["train"]["learning_rate"], 0.01);
  EXPECT_EQ(j["train"]["batch_size"], 12);
  // Unset patience follows the lowered epoch cap.
  EXPECT_EQ(j["train"]["patience"], 30);
}

TEST_F(CliTest, RanktestConsistentOrdering) {
  std::string csv = "dataset,a,b,c\n";
  for (int i = 0; i < 10; ++i) csv += "d" + std::to_string(i) + ",0.9,0.8,0.7\n";
  WriteFileAtomic(P("r.csv"), csv);
  const auto r = Cli({"ranktest", P("r.csv"), "--alpha", "0.01", "-o", P("rk.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(ReadFile(P("rk.json")));
  EXPECT_NEAR(j["statistic"].get<double>(), 20.0, 1e-9);
  EXPECT_NE(ReadFile(P("rk.json")).find("\"statistic\": 20.0"), std::string::npos);
}

TEST_F(CliTest, ClassicWorkflowIsIdempotentAndRoundTrips) {
  auto run_all = [&](const std::string& tag) {
    const std::string d = P(tag);
    EXPECT_EQ(Cli({"synth", d + "/ds", "--images", "3", "--seed", "5"}).code, 0);
    EXPECT_EQ(Cli({"extract", d + "/ds", "--descriptor", "cld", "-o", d + "/f.csv"}).code, 0);
    EXPECT_EQ(Cli({"reduce", d + "/f.csv", "--criterion", "fixed:6", "-o", d + "/m.pca.json"}).code, 0);
    EXPECT_TRUE(fs::exists(d + "/m.reduced.csv"));
    const auto t = Cli({"train", d + "/f.csv", "--model", "rf", "--pca", d + "/m.pca.json", "-o",
                        d + "/rf.json"});
    EXPECT_EQ(t.code, 0) << t.err;
    const auto s = Cli({"segment", d + "/ds/images/synth001.png", "--model", d + "/rf.json", "-o",
                        d + "/mask.png", "--report", d + "/area.json", "--partition-out",
                        d + "/part.png", "--compactness", "20", "--reference",
                        d + "/ds/masks/synth001.png"});
    EXPECT_EQ(s.code, 0) << s.err;
    const auto e = Cli({"evaluate", d + "/f.csv", "--model-spec", "gnb", "--folds", "3", "-o",
                        d + "/ev.json", "--predictions", d + "/pred.csv"});
    EXPECT_EQ(e.code, 0) << e.err;
  };
  run_all("a");
  run_all("b");
  ExpectSameFiles(dir_ / "a", dir_ / "b");

  // The mask PNG re-reads as the exact fused class map.
  const auto model = DeserializeSegmentationModel(ReadFile(P("a/rf.json")));
  const auto image = ReadImage(P("a/ds/images/synth001.png"));
  const auto result = SegmentImage(image, model, {.compactness = 20});
  EXPECT_EQ(ReadMaskPng(P("a/mask.png")), result.fused_mask);
  EXPECT_EQ(ReadPartitionPng(P("a/part.png")).labels, result.partition.labels);
  const auto report = nlohmann::json::parse(ReadFile(P("a/area.json")));
  EXPECT_EQ(report["total_pixels"], 192 * 192);
  EXPECT_TRUE(report.contains("mask_error"));
}

TEST_F(CliTest, CnnTrainingIsByteIdentical) {
  ASSERT_EQ(Cli({"synth", P("ds"), "--images", "2"}).code, 0);
  const std::vector<std::string> flags = {"--model", "cnn", "--input-size", "16", "--max-epochs",
                                          "2", "--head-width", "16", "--augment-variants", "1"};
  for (const char* name : {"n1.bin", "n2.bin"}) {
    std::vector<std::string> args = {"train", P("ds")};
    args.insert(args.end(), flags.begin(), flags.end());
    args.insert(args.end(), {"-o", P(name)});
    const auto r = Cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(ReadFile(P("n1.bin")), ReadFile(P("n2.bin")));
}

TEST_F(CliTest, ErrorsAreOneLineWithCategoryExitCodes) {
  auto check = [](const CliRun& r, int code, const std::string& category) {
    EXPECT_EQ(r.code, code) << r.err;
    EXPECT_EQ(r.err.rfind("error: " + category + ": ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  };
  check(Cli({}), 2, "usage");
  check(Cli({"slic"}), 2, "usage");
  check(Cli({"slic", P("x.png"), "-o", P("y.png"), "--target-size", "abc"}), 2, "usage");
  check(Cli({"slic", P("missing.png"), "-o", P("y.png")}), 3, "data");
  check(Cli({"evaluate", P("f.csv"), "--model-spec", "xgb", "-o", P("e.json")}), 2,
        "invalid-argument");
  check(Cli({"extract", P("nodir"), "-o", P("f.csv")}), 3, "not-found");

  // Reference without wound pixels: accuracy is still reported, exit 4.
  ASSERT_EQ(Cli({"synth", P("ds"), "--images", "1"}).code, 0);
  ASSERT_EQ(Cli({"train", P("ds"), "--model", "gnb", "-o", P("g.json")}).code, 0);
  WriteMaskPng(P("empty.png"), ClassMap{192, 192, std::vector<TissueClass>(192 * 192)});
  const auto r = Cli({"segment", P("ds/images/synth000.png"), "--model", P("g.json"), "-o",
                      P("m.png"), "--report", P("a.json"), "--reference", P("empty.png")});
  check(r, 4, "numeric");
  EXPECT_NE(r.out.find("pixel_accuracy"), std::string::npos);
  EXPECT_TRUE(nlohmann::json::parse(ReadFile(P("a.json")))["mask_error"]["mae_ratio"].is_null());

  // Label naming a superpixel beyond the stored partition.
  WriteFileAtomic(P("ds/labels.csv"), "image_id,superpixel_id,class\nsynth000,9999,fibrin\n");
  check(Cli({"extract", P("ds"), "-o", P("f.csv")}), 3, "data");
  const auto help = Cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("segment"), std::string::npos);
}

TEST(Dataset, LabelHeaderVariationsAndStems) {
  const auto rows = ParseLabelsCsv("Image, Superpixel ,Tissue\n1.jpg,4,Granulation\n2,0,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (LabelRow{"1", 4, TissueClass::kGranulation}));
  EXPECT_EQ(rows[1], (LabelRow{"2", 0, TissueClass::kNecrosis}));
  EXPECT_EQ(ParseLabelsCsv(FormatLabelsCsv(rows)), rows);
  EXPECT_THROW(ParseLabelsCsv("a,b,c\n1,2,3\n"), DataError);
  EXPECT_THROW(ParseLabelsCsv("image_id,superpixel_id,class\n1,x,fibrin\n"), DataError);
  EXPECT_THROW(ParseLabelsCsv("image_id,superpixel_id,class\n1,2,purple\n"), DataError);
  EXPECT_THROW(ParseLabelsCsv("image_id,superpixel_id,class\n1,2,fibrin\n1,2,necrosis\n"),
               DataError);
}

}  // namespace
}  // namespace ulcerseg
