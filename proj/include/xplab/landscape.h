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

#ifndef XPLAB_LANDSCAPE_H_
#define XPLAB_LANDSCAPE_H_

#include <vector>

#include "xplab/dec_pomdp.h"
#include "xplab/policy.h"

namespace xplab {

// Maximum-entropy objective
//   J_SP(pi) + alpha * E[sum_t gamma^t Ent(pi(. | tau_t))],
// where the entropy of the joint product policy at a step is the sum of the
// agents' local entropies.
double JAlpha(const DecPomdp& env, const TabularJointPolicy& policy,
              double alpha, std::size_t node_budget = kDefaultNodeBudget);

// Evenly spaced grid of `points` values covering [lo, hi].
std::vector<double> LinearGrid(double lo, double hi, int points);

struct Surface {
  double alpha = 0.0;
  std::vector<double> theta1;
  std::vector<double> theta2;
  std::vector<double> values;  // values[i * theta2.size() + j]

  double at(int i, int j) const { return values.at(i * theta2.size() + j); }
};

// JAlpha of SharedSymmetricPolicy{theta1[i], theta2[j]} at every grid point.
// Requires a one-step, two-agent, three-action game.
Surface ComputeSurface(const DecPomdp& env, double alpha,
                       const std::vector<double>& theta1_grid,
                       const std::vector<double>& theta2_grid, int threads = 1);

struct GridPoint {
  int i;
  int j;
  double value;
};

// Every grid point whose value is maximal within relative tolerance `rtol`.
std::vector<GridPoint> SurfaceArgmax(const Surface& surface, double rtol = 1e-12);

// Strict local maxima over the 8-neighbourhood (interior points only).
std::vector<GridPoint> SurfaceLocalMaxima(const Surface& surface);

}  // namespace xplab

#endif  // XPLAB_LANDSCAPE_H_
