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


#include "xplab/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "xplab/envs.h"
#include "xplab/util.h"

namespace xplab {

namespace fs = std::filesystem;

std::string ResolveOutDir(const CommandOptions& options) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (const char* env = std::getenv("XPLAB_OUT_DIR"); env && *env) return env;
  return "xplab_out";
}

void ApplyOverrides(ExperimentConfig& config, const CommandOptions& options) {
  if (options.seed) config.train.seed = *options.seed;
  if (options.games) {
    if (*options.games < 1) throw ConfigError("--games must be >= 1");
    config.eval.mode = EvalMode::kMonteCarlo;
    config.eval.games = *options.games;
  }
  if (options.exact) config.eval.mode = EvalMode::kExact;
}

namespace {

std::string Prepare(const CommandOptions& options) {
  const std::string dir = ResolveOutDir(options);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw XplabError(fmt::format("cannot create '{}': {}", dir, ec.message()));
  return dir;
}

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void WriteText(const std::string& path, const std::vector<std::string>& lines,
               const std::string& digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw XplabError(fmt::format("cannot write '{}'", path));
  out << CsvHeaderLine(digest) << "\n";
  for (const auto& l : lines) out << l << "\n";
}

bool BlockIsUniform(const XpMatrix& m, int group, int size) {
  double lo = INFINITY, hi = -INFINITY, se = 0.0;
  for (int j = group * size; j < (group + 1) * size; ++j) {
    for (int k = group * size; k < (group + 1) * size; ++k) {
      lo = std::min(lo, m.at(j, k));
      hi = std::max(hi, m.at(j, k));
      se = std::max(se, m.standard_errors[j * m.size + k]);
    }
  }
  const double tol = m.mode == EvalMode::kExact ? 1e-9 : 4.0 * se;
  return hi - lo <= tol;
}

}  // namespace

double SwitchingAlpha(const std::vector<double>& alphas, const BlockMatrix& blocks,
                      const XpMatrix& matrix) {
  double result = std::numeric_limits<double>::quiet_NaN();
  for (int g = blocks.groups - 1; g >= 0; --g) {
    if (!BlockIsUniform(matrix, g, blocks.group_size)) break;
    result = alphas.at(g);
  }
  return result;
}

CommandOutput RunTrain(ExperimentConfig config, const CommandOptions& options) {
  ApplyOverrides(config, options);
  CommandOutput out;
  out.out_dir = Prepare(options);
  auto result = Train(config.env, config.train);
  result.policy.mutable_provenance().env_config = config.env_json;
  const std::string digest = config.train.Digest();
  const auto policy_path = Join(out.out_dir, "policy.json");
  SavePolicy(result.policy, policy_path, kToolVersion);
  out.files.push_back(policy_path);
  const auto log_path = Join(out.out_dir, "training_log.csv");
  WriteTrainingLogCsv(log_path, result.log, digest);
  out.files.push_back(log_path);

  const auto greedy = TieToleranceGreedify(result.policy, config.tie_epsilon);
  EvalOptions eval = config.eval;
  out.summary.push_back(fmt::format("alpha={:g} seed={} greedy_sp={:.6g} sampled_sp={:.6g}",
                                    config.train.entropy_coefficient, config.train.seed,
                                    SpScore(*config.env, greedy, eval).mean,
                                    SpScore(*config.env, result.policy, eval).mean));
  for (const auto& l : ArgmaxLabels(*config.env, result.policy, config.tie_epsilon)) {
    out.summary.push_back("argmax " + l);
  }
  return out;
}

CommandOutput RunSweep(ExperimentConfig config, const CommandOptions& options) {
  ApplyOverrides(config, options);
  CommandOutput out;
  out.out_dir = Prepare(options);
  const std::string digest = config.Digest();
  auto sweep = SweepAlpha(config.env, config.sweep_alphas, config.seeds_per_alpha,
                          config.train, options.threads);
  const auto policy_dir = Join(out.out_dir, "policies");
  fs::create_directories(policy_dir);
  for (auto& e : sweep.entries) {
    e.policy.mutable_provenance().env_config = config.env_json;
    const auto path = Join(policy_dir, fmt::format("alpha{:02}_seed{:02}.json",
                                                   e.alpha_index, e.seed_index));
    SavePolicy(e.policy, path, kToolVersion);
    out.files.push_back(path);
  }
  const auto sweep_path = Join(out.out_dir, "sweep.csv");
  WriteSweepCsv(sweep_path, sweep, digest);
  out.files.push_back(sweep_path);

  std::vector<TabularJointPolicy> population;
  for (const auto& e : sweep.entries) population.push_back(e.policy);
  XpMatrixOptions xo;
  xo.eval = config.eval;
  xo.tie_epsilon = config.tie_epsilon;
  xo.threads = options.threads;
  if (config.env->num_agents != 2) {
    out.summary.push_back("more than two agents: pairwise matrix skipped");
    return out;
  }
  const auto matrix = BuildXpMatrix(*config.env, population, xo);
  const auto blocks = BlockAverage(matrix, config.seeds_per_alpha);
  std::vector<std::string> group_labels;
  for (double a : config.sweep_alphas) group_labels.push_back(fmt::format("alpha={:g}", a));

  const auto mpath = Join(out.out_dir, "xp_matrix.csv");
  WriteXpMatrixCsv(mpath, matrix, digest);
  WriteHeatmapPng(Join(out.out_dir, "xp_matrix.png"), matrix.size, matrix.size,
                  matrix.values, digest);
  const auto bpath = Join(out.out_dir, "xp_blocks.csv");
  WriteBlockCsv(bpath, blocks, group_labels, digest);
  WriteHeatmapPng(Join(out.out_dir, "xp_blocks.png"), blocks.groups, blocks.groups,
                  blocks.block, digest);
  out.files.insert(out.files.end(), {mpath, Join(out.out_dir, "xp_matrix.png"), bpath,
                                     Join(out.out_dir, "xp_blocks.png")});

  std::vector<std::string> rows = {"alpha,seeds,sp_mean,sp_min,intra_xp_mean,sp_equals_xp"};
  for (int g = 0; g < blocks.groups; ++g) {
    double sp_min = INFINITY;
    for (int j = g * blocks.group_size; j < (g + 1) * blocks.group_size; ++j) {
      sp_min = std::min(sp_min, matrix.at(j, j));
    }
    const bool uniform = BlockIsUniform(matrix, g, blocks.group_size);
    rows.push_back(fmt::format("{:.17g},{},{:.17g},{:.17g},{:.17g},{}", config.sweep_alphas[g],
                               blocks.group_size, blocks.sp[g], sp_min, blocks.at(g, g),
                               uniform ? 1 : 0));
    out.summary.push_back(fmt::format(
        "alpha={:<8g} greedy SP mean={:7.3f} min={:7.3f} intra-group XP={:7.3f}{}",
        config.sweep_alphas[g], blocks.sp[g], sp_min, blocks.at(g, g),
        uniform ? "  (SP = XP)" : ""));
  }
  const auto spath = Join(out.out_dir, "alpha_summary.csv");
  WriteText(spath, rows, digest);
  out.files.push_back(spath);
  const double switching = SwitchingAlpha(config.sweep_alphas, blocks, matrix);
  out.summary.push_back(
      std::isnan(switching)
          ? std::string("switching alpha: none (the largest alpha still breaks symmetry)")
          : fmt::format("switching alpha: {:g} (all seeds at SP = XP from here up)",
                        switching));
  return out;
}

CommandOutput RunLandscape(ExperimentConfig config, const CommandOptions& options) {
  ApplyOverrides(config, options);
  if (config.landscape_alphas.empty()) throw ConfigError("'landscape.alphas' is empty");
  CommandOutput out;
  out.out_dir = Prepare(options);
  const std::string digest = config.Digest();
  const auto t1 = LinearGrid(config.theta1_min, config.theta1_max, config.theta1_points);
  const auto t2 = LinearGrid(config.theta2_min, config.theta2_max, config.theta2_points);
  for (std::size_t a = 0; a < config.landscape_alphas.size(); ++a) {
    const double alpha = config.landscape_alphas[a];
    const auto surface = ComputeSurface(*config.env, alpha, t1, t2, options.threads);
    const auto stem = Join(out.out_dir, fmt::format("landscape_alpha{:02}", a));
    WriteSurfaceCsv(stem + ".csv", surface, digest);
    HeatmapOptions ho;
    ho.cell_pixels = std::max(1, 600 / static_cast<int>(std::max(t1.size(), t2.size())));
    ho.annotate = false;
    const auto argmax = SurfaceArgmax(surface);
    for (const auto& p : argmax) ho.markers.push_back({p.i, p.j});
    WriteHeatmapPng(stem + ".png", static_cast<int>(t1.size()), static_cast<int>(t2.size()),
                    surface.values, digest, ho);
    out.files.push_back(stem + ".csv");
    out.files.push_back(stem + ".png");
    std::string where;
    for (const auto& p : argmax) {
      where += fmt::format(" (theta1={:.4g}, theta2={:.4g})", t1[p.i], t2[p.j]);
    }
    out.summary.push_back(fmt::format("alpha={:g} max J={:.6f} at{}", alpha,
                                      argmax.front().value, where));
  }
  return out;
}

CommandOutput RunReport(const std::string& population_dir, const CommandOptions& options,
                        double tie_epsilon) {
  if (!fs::is_directory(population_dir)) {
    throw XplabError(fmt::format("'{}' is not a directory", population_dir));
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(population_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw XplabError(fmt::format("no policy files in '{}'", population_dir));
  }

  EnvPtr env;
  std::string env_name;
  nlohmann::json env_json;
  std::map<std::pair<double, std::string>, std::vector<TabularJointPolicy>> grouped;
  for (const auto& path : paths) {
    TabularJointPolicy p;
    try {
      p = LoadPolicy(path.string());
    } catch (const XplabError& e) {
      throw XplabError(fmt::format("cannot load '{}': {}", path.string(), e.what()));
    }
    const auto& prov = p.provenance();
    if (!env) {
      if (prov.env_config.is_null()) {
        throw XplabError(fmt::format("'{}' does not record its environment", path.string()));
      }
      env_json = prov.env_config;
      env = MakeEnvFromJson(env_json);
      env_name = prov.env_name;
    } else if (prov.env_name != env_name || prov.env_config != env_json) {
      throw XplabError(fmt::format("'{}' was trained on {} but '{}' on {}", path.string(),
                                   prov.env_name, paths.front().string(), env_name));
    }
    if (p.num_agents() != env->num_agents) {
      throw XplabError(fmt::format("'{}' has {} agents, environment has {}",
                                   path.string(), p.num_agents(), env->num_agents));
    }
    grouped[{prov.alpha, prov.config_digest}].push_back(std::move(p));
  }

  std::vector<std::vector<TabularJointPolicy>> groups;
  std::string digest_source;
  for (auto& [key, members] : grouped) {
    digest_source += key.second + ";";
    groups.push_back(std::move(members));
  }
  const std::string digest = HexDigest(digest_source);

  ExperimentConfig defaults;
  defaults.env = env;
  ApplyOverrides(defaults, options);
  XpMatrixOptions xo;
  xo.eval = defaults.eval;
  xo.tie_epsilon = tie_epsilon;
  xo.threads = options.threads;
  const auto report = BuildXpReport(*env, groups, xo);

  CommandOutput out;
  out.out_dir = Prepare(options);
  std::vector<std::string> labels;
  for (const auto& g : report.groups) labels.push_back(g.label);
  if (env->num_agents == 2) {
    const auto mpath = Join(out.out_dir, "report_matrix.csv");
    WriteXpMatrixCsv(mpath, report.matrix, digest);
    WriteHeatmapPng(Join(out.out_dir, "report_matrix.png"), report.matrix.size,
                    report.matrix.size, report.matrix.values, digest);
    out.files.insert(out.files.end(), {mpath, Join(out.out_dir, "report_matrix.png")});
    if (report.has_blocks) {
      const auto bpath = Join(out.out_dir, "report_blocks.csv");
      WriteBlockCsv(bpath, report.blocks, labels, digest);
      WriteHeatmapPng(Join(out.out_dir, "report_blocks.png"), report.blocks.groups,
                      report.blocks.groups, report.blocks.block, digest);
      out.files.insert(out.files.end(), {bpath, Join(out.out_dir, "report_blocks.png")});
    }
  }
  const auto gpath = Join(out.out_dir, "report_groups.csv");
  WriteGroupsCsv(gpath, report.groups, digest);
  out.files.push_back(gpath);
  const auto npath = Join(out.out_dir, "report_notes.txt");
  WriteText(npath, report.notes, digest);
  out.files.push_back(npath);

  for (const auto& g : report.groups) {
    std::string xp = "no cross-seed teams";
    if (g.has_xp) {
      xp = fmt::format("XP {:.3f} +- {:.3f} over {} teams", g.xp.mean, g.xp.spread,
                       g.xp.team_count);
    }
    out.summary.push_back(fmt::format("{} ({} seeds): SP {:.3f} +- {:.3f}; {}", g.label,
                                      g.size, g.sp_mean, g.sp_spread, xp));
  }
  for (const auto& n : report.notes) out.summary.push_back("note: " + n);
  return out;
}

}  // namespace xplab
