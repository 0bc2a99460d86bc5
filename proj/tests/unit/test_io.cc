// Copyright 2026 The xplab Authors
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


#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "test_util.h"
#include "xplab/commands.h"
#include "xplab/io.h"
#include "xplab/util.h"

namespace xplab {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows of a CSV file (after the digest comment and the header).
std::vector<std::vector<std::string>> CsvRows(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  for (int n = 0; std::getline(in, line); ++n) {
    if (n < 2) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

std::string FirstLine(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

nlohmann::json SmallMatrixConfig() {
  return nlohmann::json::parse(R"({
    "env": {"kind": "matrix", "payoff": [[2, -2, 1], [-2, 2, 1], [1, 1, 1]]},
    "train": {"entropy_coefficient": 1.5, "iterations": 300, "seed": 1},
    "sweep": {"alphas": [0.1, 1.5], "seeds_per_alpha": 3},
    "landscape": {"alphas": [0.0, 1.2],
                  "theta1": {"min": -2, "max": 2, "points": 9},
                  "theta2": {"min": -2, "max": 2, "points": 5}}
  })");
}

void ExpectConfigError(const nlohmann::json& doc, const std::string& needle) {
  try {
    ExperimentConfig::FromJson(doc);
    FAIL("expected ConfigError for " << doc.dump());
  } catch (const ConfigError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
  }
}

TEST_CASE("experiment config parsing") {
  const auto c = ExperimentConfig::FromJson(SmallMatrixConfig());
  CHECK(c.train.entropy_coefficient == 1.5);
  CHECK(c.sweep_alphas == std::vector<double>{0.1, 1.5});
  CHECK(c.seeds_per_alpha == 3);
  CHECK(c.theta1_points == 9);
  CHECK(c.env->num_agents == 2);

  const auto back = ExperimentConfig::FromJson(c.ToJson());
  CHECK(back.Digest() == c.Digest());
  auto reseeded = SmallMatrixConfig();
  reseeded["train"]["seed"] = 99;
  CHECK(ExperimentConfig::FromJson(reseeded).Digest() == c.Digest());
  auto changed = SmallMatrixConfig();
  changed["sweep"]["seeds_per_alpha"] = 4;
  CHECK(ExperimentConfig::FromJson(changed).Digest() != c.Digest());

  auto bad = SmallMatrixConfig();
  bad["train"]["batch"] = 3;
  ExpectConfigError(bad, "train.batch");
  bad = SmallMatrixConfig();
  bad["sweeps"] = {};
  ExpectConfigError(bad, "sweeps");
  bad = SmallMatrixConfig();
  bad["landscape"]["alphas"] = nlohmann::json::array();
  ExpectConfigError(bad, "landscape.alphas");
  bad = SmallMatrixConfig();
  bad["sweep"]["alphas"] = nlohmann::json::array();
  ExpectConfigError(bad, "sweep.alphas");
  bad = SmallMatrixConfig();
  bad.erase("env");
  ExpectConfigError(bad, "env");
  bad = SmallMatrixConfig();
  bad["eval"] = {{"mode", "guess"}};
  ExpectConfigError(bad, "eval.mode");

  const auto dir = testing::ScratchDir("config_parse");
  std::ofstream(dir / "broken.json") << "{\"env\": ";
  CHECK_THROWS_AS(ExperimentConfig::Load((dir / "broken.json").string()), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::Load((dir / "absent.json").string()), ConfigError);
}

TEST_CASE("CSV writers embed version and digest") {
  const auto dir = testing::ScratchDir("csv");
  CHECK(CsvHeaderLine("abc") == std::string("# xplab ") + kToolVersion + " config_digest=abc");

  TrainingLog log;
  log.rows.push_back({1, 0.5, 1.25, 3.0});
  WriteTrainingLogCsv((dir / "log.csv").string(), log, "d1");
  const auto text = Slurp(dir / "log.csv");
  CHECK(text.rfind(CsvHeaderLine("d1") + "\n", 0) == 0);
  CHECK(text.find("iteration,sp_estimate,mean_entropy,grad_norm\n1,0.5,1.25,3\n") !=
        std::string::npos);

  Surface s;
  s.theta1 = {0.1};
  s.theta2 = {-1.0, 1.0};
  s.values = {0.1 + 0.2, 2.0};
  WriteSurfaceCsv((dir / "surface.csv").string(), s, "d2");
  const auto surf = Slurp(dir / "surface.csv");
  // Full precision so values read back exactly.
  CHECK(surf.find("0.10000000000000001,-1,0.30000000000000004") != std::string::npos);
}

TEST_CASE("heatmap PNG is written with the digest") {
  const auto dir = testing::ScratchDir("png");
  const auto path = (dir / "m.png").string();
  WriteHeatmapPng(path, 2, 3, {1, 2, 3, NAN, -2, 0.5}, "feedface");
  const auto bytes = Slurp(path);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.compare(0, 8, "\x89PNG\r\n\x1a\n") == 0);
  CHECK(bytes.find("feedface") != std::string::npos);
  CHECK_THROWS_AS(WriteHeatmapPng(path, 2, 2, {1, 2, 3}, "x"), XplabError);
}

TEST_CASE("train command is byte-for-byte deterministic") {
  const auto config = ExperimentConfig::FromJson(SmallMatrixConfig());
  CommandOptions a;
  a.out_dir = testing::ScratchDir("train_a").string();
  CommandOptions b;
  b.out_dir = testing::ScratchDir("train_b").string();
  const auto out = RunTrain(config, a);
  RunTrain(config, b);
  REQUIRE(out.files.size() == 2);
  for (const char* name : {"policy.json", "training_log.csv"}) {
    CHECK(Slurp(fs::path(a.out_dir) / name) == Slurp(fs::path(b.out_dir) / name));
  }
  // alpha = 1.5 on the convention game: the greedified policy picks action 3.
  const auto policy = LoadPolicy((fs::path(a.out_dir) / "policy.json").string());
  for (int i = 0; i < 2; ++i) {
    CHECK(Greedify(policy).ActionProbs(i, "none", 3) == std::vector<double>{0, 0, 1});
  }
  CHECK(policy.provenance().config_digest == config.train.Digest());

  CommandOptions reseeded = a;
  reseeded.out_dir = testing::ScratchDir("train_c").string();
  reseeded.seed = 12345;
  RunTrain(config, reseeded);
  CHECK(LoadPolicy((fs::path(reseeded.out_dir) / "policy.json").string())
            .provenance().seed == 12345);
}

TEST_CASE("output directory resolution") {
  CommandOptions o;
  o.out_dir = "explicit";
  CHECK(ResolveOutDir(o) == "explicit");
  o.out_dir.clear();
  ::setenv("XPLAB_OUT_DIR", "/tmp/from_env", 1);
  CHECK(ResolveOutDir(o) == "/tmp/from_env");
  ::unsetenv("XPLAB_OUT_DIR");
  CHECK(ResolveOutDir(o) == "xplab_out");
}

TEST_CASE("sweep command: outputs, digests and thread invariance") {
  const auto config = ExperimentConfig::FromJson(SmallMatrixConfig());
  CommandOptions one;
  one.out_dir = testing::ScratchDir("sweep_1").string();
  CommandOptions many;
  many.out_dir = testing::ScratchDir("sweep_3").string();
  many.threads = 3;
  const auto out = RunSweep(config, one);
  RunSweep(config, many);
  for (const auto& file : out.files) {
    const auto rel = fs::relative(file, one.out_dir);
    CHECK_MESSAGE(Slurp(file) == Slurp(fs::path(many.out_dir) / rel), rel.string());
    if (rel.extension() == ".csv") {
      CHECK(FirstLine(file) == CsvHeaderLine(config.Digest()));
    }
  }
  CHECK(fs::exists(fs::path(one.out_dir) / "xp_matrix.png"));
  CHECK(fs::exists(fs::path(one.out_dir) / "xp_blocks.csv"));
  CHECK(fs::exists(fs::path(one.out_dir) / "policies" / "alpha01_seed02.json"));

  // Report over the saved population: two groups of three seeds.
  CommandOptions report;
  report.out_dir = testing::ScratchDir("report").string();
  const auto r = RunReport((fs::path(one.out_dir) / "policies").string(), report);
  const auto groups = CsvRows(fs::path(report.out_dir) / "report_groups.csv");
  REQUIRE(groups.size() == 2);
  for (const auto& g : groups) {
    CHECK(g[3] == "3");
    CHECK(g[6] == "6");  // 3 seeds, 2 seats
  }
  CHECK(fs::exists(fs::path(report.out_dir) / "report_matrix.png"));
}

TEST_CASE("report: team counts, single policies and mixed environments") {
  auto env = MakeMatrixGame(ConventionPayoff());
  auto config = ExperimentConfig::FromJson(SmallMatrixConfig());
  const auto pop = testing::ScratchDir("pop4");
  for (int k = 0; k < 4; ++k) {
    auto p = testing::PureMatrixPolicy(3, k % 2, k % 2);
    auto& prov = p.mutable_provenance();
    prov.env_name = env->name;
    prov.env_config = config.env_json;
    prov.alpha = 0.1;
    prov.seed = k;
    prov.config_digest = "0000000000000001";
    SavePolicy(p, (pop / ("p" + std::to_string(k) + ".json")).string(), kToolVersion);
  }
  CommandOptions o;
  o.out_dir = testing::ScratchDir("pop4_out").string();
  RunReport(pop.string(), o);
  const auto groups = CsvRows(fs::path(o.out_dir) / "report_groups.csv");
  REQUIRE(groups.size() == 1);
  CHECK(groups[0][3] == "4");
  CHECK(groups[0][6] == "12");

  const auto lone = testing::ScratchDir("pop1");
  fs::copy_file(pop / "p0.json", lone / "p0.json");
  o.out_dir = testing::ScratchDir("pop1_out").string();
  const auto single = RunReport(lone.string(), o);
  const auto notes = Slurp(fs::path(o.out_dir) / "report_notes.txt");
  CHECK(notes.find("no cross-seed teams") != std::string::npos);

  auto cat = testing::CatDogConvention(0);
  cat.mutable_provenance().env_name = MakeCatDog()->name;
  cat.mutable_provenance().env_config = {{"kind", "cat_dog"}};
  SavePolicy(cat, (pop / "zz_cat.json").string(), kToolVersion);
  try {
    RunReport(pop.string(), o);
    FAIL("expected an environment mismatch");
  } catch (const XplabError& e) {
    CHECK(std::string(e.what()).find("zz_cat.json") != std::string::npos);
  }
}

TEST_CASE("landscape command") {
  const auto config = ExperimentConfig::FromJson(SmallMatrixConfig());
  CommandOptions o;
  o.out_dir = testing::ScratchDir("landscape").string();
  const auto out = RunLandscape(config, o);
  CHECK(out.files.size() == 4);
  const auto csv = Slurp(fs::path(o.out_dir) / "landscape_alpha00.csv");
  CHECK(csv.find("theta1,theta2,value") != std::string::npos);
  auto cat = SmallMatrixConfig();
  cat["env"] = {{"kind", "cat_dog"}};
  CHECK_THROWS_AS(RunLandscape(ExperimentConfig::FromJson(cat), o), XplabError);
}

TEST_CASE("switching alpha") {
  XpMatrix m;
  m.size = 6;
  m.values.assign(36, 0.0);
  m.standard_errors.assign(36, 0.0);
  // Groups of two: alpha 0.1 breaks symmetry, 1.0 and 1.5 are uniform.
  const double v[6][6] = {{2, -2, 1, 1, 1, 1},  {-2, 2, 1, 1, 1, 1},
                          {1, 1, 1, 1, 1, 1},   {1, 1, 1, 1, 1, 1},
                          {1, 1, 1, 1, 1, 1},   {1, 1, 1, 1, 1, 1}};
  for (int j = 0; j < 6; ++j) {
    for (int k = 0; k < 6; ++k) m.values[j * 6 + k] = v[j][k];
  }
  const auto blocks = BlockAverage(m, 2);
  CHECK(SwitchingAlpha({0.1, 1.0, 1.5}, blocks, m) == 1.0);
  m.values[5 * 6 + 4] = -2;
  CHECK(std::isnan(SwitchingAlpha({0.1, 1.0, 1.5}, BlockAverage(m, 2), m)));
}

}  // namespace
}  // namespace xplab
