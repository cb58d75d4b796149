//
// Copyright 2026 The surveydp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "surveydp/cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtest/gtest.h"
#include "surveydp/data.h"
#include "surveydp/tabulate.h"
#include "test_support.h"

namespace surveydp {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

Json ReadJson(const fs::path& p) { return Json::parse(testing::ReadFile(p)); }

// Shared sample and a lighter sampler so the suite stays quick.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::TempDir("cli"));
    const Result r = Cli({"simulate", "--seed", "11", "--output-dir", (*root_ / "sim").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ofstream cfg(*root_ / "fast.json");
    cfg << R"({"mcmc": {"warmup": 2000, "keep": 1000}})";
  }
  static void TearDownTestSuite() { delete root_; }

  static std::string Sample() { return (*root_ / "sim" / "sample.csv").string(); }
  static std::string Config() { return (*root_ / "fast.json").string(); }
  static fs::path Dir(const std::string& name) { return *root_ / name; }

  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST_F(CliTest, SimulateWritesSampleAndManifest) {
  const Json m = ReadJson(Dir("sim") / "manifest.json");
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["seed"], 11);
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(LoadCsv(Sample()).size(), 1000u);
  EXPECT_NEAR(m["sample_corr_y_w"].get<double>(), -0.58, 0.05);
}

TEST_F(CliTest, SynthesizeReportsEpsilonAndIsReproducible) {
  const std::vector<std::string> args = {"synthesize", "--config", Config(), "--seed", "3",
                                         "--input", Sample(), "--mechanism", "fbs", "--m", "3",
                                         "--target-delta", "1.8", "--output-dir"};
  auto a = args, b = args;
  a.push_back(Dir("syn_a").string());
  b.push_back(Dir("syn_b").string());
  const Result ra = Cli(a);
  ASSERT_EQ(ra.code, 0) << ra.err;
  const Result rb = Cli(b);
  ASSERT_EQ(rb.code, 0) << rb.err;

  const Json m = ReadJson(Dir("syn_a") / "manifest.json");
  EXPECT_EQ(m["m"], 3);
  EXPECT_GE(m["epsilon"].get<double>(), 10.5);
  EXPECT_LE(m["epsilon"].get<double>(), 10.8);
  EXPECT_DOUBLE_EQ(m["epsilon"].get<double>(), 2.0 * m["delta"].get<double>() * 3);
  const Json acct = ReadJson(Dir("syn_a") / "privacy_account.json");
  EXPECT_DOUBLE_EQ(acct["epsilon"].get<double>(), 2.0 * acct["delta"].get<double>() * 3);

  int compared = 0;
  for (const auto& f : m["outputs"]) {
    const std::string name = f.get<std::string>();
    EXPECT_EQ(testing::ReadFile(Dir("syn_a") / name), testing::ReadFile(Dir("syn_b") / name))
        << name;
    ++compared;
  }
  EXPECT_GT(compared, 5);
  EXPECT_EQ(testing::ReadFile(Dir("syn_a") / "manifest.json"),
            testing::ReadFile(Dir("syn_b") / "manifest.json"));

  // X columns come through untouched.
  const SurveyDataset orig = LoadCsv(Sample());
  LoadOptions o;
  o.schema.pi = "";
  o.schema.stratum = "stratum";
  const SurveyDataset syn = LoadCsv((Dir("syn_a") / "synthetic_1.csv").string(), o);
  ASSERT_EQ(syn.size(), orig.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    EXPECT_EQ(syn[i].field, orig[i].field);
    EXPECT_EQ(syn[i].gender, orig[i].gender);
    EXPECT_EQ(syn[i].stratum, orig[i].stratum);
  }

  // Grand count of the release lies within 3 combined SEs of the sample's.
  const TablePair conf = ConfidentialTables(orig);
  const Result rt = Cli({"tabulate", "--seed", "3", "--release",
                         (Dir("syn_a") / "synthetic.json").string(), "--output-dir",
                         Dir("tab").string()});
  ASSERT_EQ(rt.code, 0) << rt.err;
  const Json counts = ReadJson(Dir("tab") / "table_counts.json");
  ASSERT_EQ(counts["rows"].size(), 27u);
  EXPECT_EQ(counts["m"], 3);
  const Json& grand = counts["rows"].back();
  ASSERT_EQ(grand["cell_kind"], "grand");
  EXPECT_NEAR(grand["estimate"].get<double>(), conf.counts.rows.back().estimate,
              3.0 * grand["se"].get<double>());

  // Margins add up across the combined count table.
  std::map<int, double> by_field;
  double interior = 0.0;
  for (const auto& row : counts["rows"]) {
    if (row["cell_kind"] == "interior") {
      interior += row["estimate"].get<double>();
      by_field[row["field"].get<int>()] += row["estimate"].get<double>();
    }
  }
  const double g = grand["estimate"].get<double>();
  EXPECT_NEAR(interior, g, 1e-9 * g);
  for (const auto& row : counts["rows"]) {
    if (row["cell_kind"] == "row_margin") {
      EXPECT_NEAR(by_field[row["field"].get<int>()], row["estimate"].get<double>(), 1e-9 * g);
    }
  }
}

TEST_F(CliTest, NoiseGivesTwentySevenCells) {
  const Result r = Cli({"noise", "--seed", "5", "--input", Sample(), "--epsilon", "10.8",
                        "--output-dir", Dir("noise").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadJson(Dir("noise") / "table_counts.json")["rows"].size(), 27u);
  EXPECT_EQ(ReadJson(Dir("noise") / "table_means.json")["rows"].size(), 27u);
  const Json b = ReadJson(Dir("noise") / "privacy_account.json");
  EXPECT_NEAR(8 * b["epsilon_pc"].get<double>() + 8 * b["epsilon_vc"].get<double>(), 10.8, 1e-12);
  EXPECT_EQ(ReadJson(Dir("noise") / "manifest.json")["epsilon"], 10.8);
}

TEST_F(CliTest, ConfidentialTabulation) {
  const Result r = Cli({"tabulate", "--seed", "1", "--input", Sample(), "--output-dir",
                        Dir("conf").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = testing::ReadFile(Dir("conf") / "table_means.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "cell_kind,field,gender,estimate,se,mechanism,m,epsilon");
}

TEST_F(CliTest, ErrorsAreSingleLines) {
  const std::vector<std::vector<std::string>> bad = {
      {"synthesize", "--seed", "1", "--input", Sample(), "--target-delta", "1.8", "--epsilon",
       "10.8", "--output-dir", Dir("bad").string()},
      {"synthesize", "--seed", "1", "--input", Sample(), "--output-dir", Dir("bad").string()},
      {"noise", "--seed", "1", "--input", (Dir("nope") / "missing.csv").string(), "--epsilon", "1",
       "--output-dir", Dir("bad").string()},
      {"noise", "--seed", "1", "--bogus", "2"},
      {"noise", "--input", Sample(), "--epsilon", "1"},
      {"frobnicate", "--seed", "1"},
      {"synthesize", "--seed", "1", "--input", Sample(), "--mechanism", "laplace", "--epsilon",
       "1", "--output-dir", Dir("bad").string()},
  };
  for (const auto& args : bad) {
    const Result r = Cli(args);
    EXPECT_NE(r.code, 0) << args[0];
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    EXPECT_EQ(r.err.rfind("surveydp: error: ", 0), 0u) << r.err;
  }
  const Result conflict = Cli(bad[0]);
  EXPECT_NE(conflict.err.find("conflicting"), std::string::npos);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const fs::path dir = Dir("env_out");
  ::setenv("SURVEYDP_OUTPUT_DIR", dir.string().c_str(), 1);
  const Result r = Cli({"tabulate", "--seed", "1", "--input", Sample()});
  ::unsetenv("SURVEYDP_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Fnv1aTest, KnownValues) {
  EXPECT_EQ(Fnv1aHex(""), "cbf29ce484222325");
  EXPECT_EQ(Fnv1aHex("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace surveydp
