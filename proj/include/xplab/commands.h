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


#ifndef XPLAB_COMMANDS_H_
#define XPLAB_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xplab/io.h"

namespace xplab {

// Overrides shared by every subcommand.
struct CommandOptions {
  std::string out_dir;  // empty: $XPLAB_OUT_DIR, else "xplab_out"
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<int> games;  // switches evaluation to Monte Carlo
  bool exact = false;        // forces exact evaluation
};

struct CommandOutput {
  std::string out_dir;
  std::vector<std::string> files;  // in write order
  std::vector<std::string> summary;
};

std::string ResolveOutDir(const CommandOptions& options);
void ApplyOverrides(ExperimentConfig& config, const CommandOptions& options);

// policy.json, training_log.csv.
CommandOutput RunTrain(ExperimentConfig config, const CommandOptions& options);

// sweep.csv, alpha_summary.csv, xp_matrix.{csv,png}, xp_blocks.{csv,png}
// and policies/alphaAA_seedSS.json.
CommandOutput RunSweep(ExperimentConfig config, const CommandOptions& options);

// landscape_alphaAA.{csv,png} per alpha.
CommandOutput RunLandscape(ExperimentConfig config, const CommandOptions& options);

// Loads every *.json policy in `population_dir`, groups by (alpha, config
// digest) and writes report_groups.csv, report_notes.txt and, for two-agent
// environments, report_matrix.{csv,png} and report_blocks.{csv,png}.
CommandOutput RunReport(const std::string& population_dir,
                        const CommandOptions& options,
                        double tie_epsilon = kDefaultTieEpsilon);

// Smallest sweep alpha from which every larger alpha has all seeds at
// greedy SP equal to intra-group greedy XP; NaN if none.
double SwitchingAlpha(const std::vector<double>& alphas, const BlockMatrix& blocks,
                      const XpMatrix& matrix);

}  // namespace xplab

#endif  // XPLAB_COMMANDS_H_
