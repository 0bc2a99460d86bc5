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


#ifndef XPLAB_IO_H_
#define XPLAB_IO_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xplab/eval.h"
#include "xplab/landscape.h"
#include "xplab/train.h"

namespace xplab {

// One experiment file:
//   {"env": {...}, "train": {...}, "sweep": {...}, "eval": {...},
//    "landscape": {...}}
// Only "env" is required. Unknown keys are rejected with ConfigError.
struct ExperimentConfig {
  nlohmann::json env_json;
  EnvPtr env;
  TrainConfig train;
  std::vector<double> sweep_alphas = {0.1, 0.5, 1.0, 1.2, 1.5};
  int seeds_per_alpha = 5;
  EvalOptions eval;
  double tie_epsilon = kDefaultTieEpsilon;
  std::vector<double> landscape_alphas = {1.0, 1.2};
  double theta1_min = -4.0, theta1_max = 4.0;
  int theta1_points = 201;
  double theta2_min = -4.0, theta2_max = 4.0;
  int theta2_points = 201;

  static ExperimentConfig FromJson(const nlohmann::json& doc);
  static ExperimentConfig Load(const std::string& path);
  nlohmann::json ToJson() const;
  // Digest of the canonical configuration without the training seed.
  std::string Digest() const;
};

// "# xplab <version> config_digest=<digest>", the first line of every CSV.
std::string CsvHeaderLine(const std::string& digest);

void WriteTrainingLogCsv(const std::string& path, const TrainingLog& log,
                         const std::string& digest);
void WriteSweepCsv(const std::string& path, const SweepResult& sweep,
                   const std::string& digest);
void WriteXpMatrixCsv(const std::string& path, const XpMatrix& matrix,
                      const std::string& digest);
void WriteBlockCsv(const std::string& path, const BlockMatrix& blocks,
                   const std::vector<std::string>& group_labels,
                   const std::string& digest);
void WriteSurfaceCsv(const std::string& path, const Surface& surface,
                     const std::string& digest);
void WriteGroupsCsv(const std::string& path, const std::vector<GroupReport>& groups,
                    const std::string& digest);

// Heatmap PNG. Colors run from dark purple (minimum) through teal to yellow
// (maximum) on a fixed viridis-like ramp; NaN cells are grey. With
// `annotate`, each cell carries its value to two decimals. The digest is
// stored in a tEXt chunk.
struct HeatmapOptions {
  int cell_pixels = 64;
  bool annotate = true;
  std::vector<std::pair<int, int>> markers;  // (row, col) outlined in red
};
void WriteHeatmapPng(const std::string& path, int rows, int cols,
                     const std::vector<double>& values, const std::string& digest,
                     const HeatmapOptions& options = {});

}  // namespace xplab

#endif  // XPLAB_IO_H_
