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


// Command-line driver:
//
//   xplab train     --config exp.json [--out-dir DIR] [--seed N]
//   xplab sweep     --config exp.json [--threads N] [--games N | --exact]
//   xplab landscape --config exp.json
//   xplab report    POPULATION_DIR [--games N | --exact]
//
// Exit codes: 0 success, 2 bad configuration, 3 training diverged, 1 other.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "xplab/commands.h"
#include "xplab/util.h"

namespace {

void Print(const xplab::CommandOutput& out) {
  for (const auto& line : out.summary) std::cout << line << "\n";
  for (const auto& f : out.files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xplab: symmetry breaking and cross-play in small Dec-POMDPs"};
  app.set_version_flag("--version", std::string(xplab::kToolVersion));
  app.require_subcommand(1);

  xplab::CommandOptions options;
  std::string config_path;
  std::string population_dir;
  std::uint64_t seed = 0;
  int games = 0;
  double tie_epsilon = xplab::kDefaultTieEpsilon;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", options.out_dir,
                    "Output directory (default: $XPLAB_OUT_DIR or ./xplab_out)");
    sub->add_option("--threads", options.threads, "Worker threads")
        ->check(CLI::PositiveNumber);
    auto* g = sub->add_option("--games", games, "Monte Carlo evaluation with N games")
                  ->check(CLI::PositiveNumber);
    sub->add_flag("--exact", options.exact, "Exact evaluation by enumeration")
        ->excludes(g);
  };

  auto* train = app.add_subcommand("train", "Train one joint policy");
  auto* sweep = app.add_subcommand("sweep", "Train seeds over an alpha grid and cross-play them");
  auto* landscape = app.add_subcommand("landscape", "Objective surface of the shared policy");
  auto* report = app.add_subcommand("report", "Cross-play report for a policy directory");
  for (auto* sub : {train, sweep, landscape}) {
    sub->add_option("--config", config_path, "Experiment JSON")->required();
    sub->add_option("--seed", seed, "Master seed (overrides train.seed)");
    add_common(sub);
  }
  report->add_option("population_dir", population_dir, "Directory of policy files")
      ->required();
  report->add_option("--tie-epsilon", tie_epsilon, "Relative tie tolerance for greedification");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (games > 0) options.games = games;
    for (auto* sub : {train, sweep, landscape}) {
      if (sub->parsed() && sub->count("--seed")) options.seed = seed;
    }
    xplab::CommandOutput out;
    if (report->parsed()) {
      out = xplab::RunReport(population_dir, options, tie_epsilon);
    } else {
      const auto config = xplab::ExperimentConfig::Load(config_path);
      if (train->parsed()) out = xplab::RunTrain(config, options);
      if (sweep->parsed()) out = xplab::RunSweep(config, options);
      if (landscape->parsed()) out = xplab::RunLandscape(config, options);
    }
    Print(out);
  } catch (const xplab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const xplab::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
