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


#include "xplab/landscape.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "xplab/train.h"

namespace xplab {

double JAlpha(const DecPomdp& env, const TabularJointPolicy& policy, double alpha,
              std::size_t node_budget) {
  double total = 0.0;
  for (const auto& wt : EnumerateTrajectories(env, policy, node_budget)) {
    double w = 1.0;
    double value = 0.0;
    for (const auto& step : wt.trajectory.steps) {
      double h = 0.0;
      for (int i = 0; i < env.num_agents; ++i) {
        if (step.num_legal[i] > 1) {
          h += PolicyEntropy(policy, i, step.aoh_keys[i], step.num_legal[i]);
        }
      }
      value += w * (step.reward + alpha * h);
      w *= env.discount;
    }
    total += wt.probability * value;
  }
  return total;
}

std::vector<double> LinearGrid(double lo, double hi, int points) {
  if (points < 1) throw ConfigError("grid needs at least one point");
  if (!(lo <= hi)) throw ConfigError(fmt::format("grid bounds [{}, {}] are reversed", lo, hi));
  if (points == 1) return {lo};
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / (points - 1);
  }
  grid.back() = hi;
  return grid;
}

Surface ComputeSurface(const DecPomdp& env, double alpha,
                       const std::vector<double>& theta1_grid,
                       const std::vector<double>& theta2_grid, int threads) {
  Surface s;
  s.alpha = alpha;
  s.theta1 = theta1_grid;
  s.theta2 = theta2_grid;
  const int rows = static_cast<int>(theta1_grid.size());
  const int cols = static_cast<int>(theta2_grid.size());
  s.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  ParallelFor(rows * cols, threads, [&](int cell) {
    const SharedSymmetricPolicy p{theta1_grid[cell / cols], theta2_grid[cell % cols]};
    s.values[cell] = JAlpha(env, p.ToJointPolicy(env), alpha);
  });
  return s;
}

std::vector<GridPoint> SurfaceArgmax(const Surface& surface, double rtol) {
  std::vector<GridPoint> out;
  if (surface.values.empty()) return out;
  const double best = *std::max_element(surface.values.begin(), surface.values.end());
  const double cut = best - rtol * std::max(1.0, std::abs(best));
  const int cols = static_cast<int>(surface.theta2.size());
  for (std::size_t c = 0; c < surface.values.size(); ++c) {
    if (surface.values[c] >= cut) {
      out.push_back({static_cast<int>(c) / cols, static_cast<int>(c) % cols,
                     surface.values[c]});
    }
  }
  return out;
}

std::vector<GridPoint> SurfaceLocalMaxima(const Surface& surface) {
  std::vector<GridPoint> out;
  const int rows = static_cast<int>(surface.theta1.size());
  const int cols = static_cast<int>(surface.theta2.size());
  for (int i = 1; i + 1 < rows; ++i) {
    for (int j = 1; j + 1 < cols; ++j) {
      const double v = surface.at(i, j);
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di || dj) && surface.at(i + di, j + dj) >= v) {
            strict = false;
            break;
          }
        }
      }
      if (strict) out.push_back({i, j, v});
    }
  }
  return out;
}

}  // namespace xplab
