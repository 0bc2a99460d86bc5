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

#ifndef XPLAB_EVAL_H_
#define XPLAB_EVAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xplab/dec_pomdp.h"
#include "xplab/policy.h"

namespace xplab {

enum class EvalMode { kExact, kMonteCarlo };

struct EvalOptions {
  EvalMode mode = EvalMode::kExact;
  int games = 10000;
  std::uint64_t seed = 0;
  std::size_t node_budget = kDefaultNodeBudget;
};

struct Score {
  double mean = 0.0;
  // Standard error of the mean; 0 in exact mode.
  double standard_error = 0.0;
};

// Expected discounted return. Exact mode sums over enumerated trajectories;
// Monte Carlo mode averages `games` sampled episodes.
Score SpScore(const DecPomdp& env, const TabularJointPolicy& policy,
              const EvalOptions& options = {});

// Permutation-averaged cross-play: the mean over all n! assignments phi of
// J((pi_{phi(1)}^1, ..., pi_{phi(n)}^n)). Requires exactly n policies.
Score XpScore(const DecPomdp& env, std::span<const TabularJointPolicy> policies,
              const EvalOptions& options = {});

// Seat-ordered pairwise matrix, entry (j, k) = J((pi_j^1, pi_k^2)).
struct XpMatrix {
  std::vector<std::string> labels;
  std::vector<double> alphas;
  std::vector<std::uint64_t> seeds;
  int size = 0;
  std::vector<double> values;          // row-major
  std::vector<double> standard_errors;  // row-major; zeros in exact mode
  EvalMode mode = EvalMode::kExact;
  int games = 0;

  double at(int row, int col) const { return values.at(row * size + col); }
};

struct XpMatrixOptions {
  EvalOptions eval;
  bool greedy_first = true;
  double tie_epsilon = kDefaultTieEpsilon;
  int threads = 1;
};

// Fills all ordered pairs of a two-agent population. Cell (j, k) in Monte
// Carlo mode uses the stream DeriveSeed(eval.seed, j, k).
XpMatrix BuildXpMatrix(const DecPomdp& env,
                       std::span<const TabularJointPolicy> population,
                       const XpMatrixOptions& options = {});

// Group-level summary of a matrix whose population is ordered in contiguous
// groups of `group_size`. For diagonal blocks `sp` holds the mean of the
// diagonal entries and `block` the mean of the off-diagonal entries
// (intra-group XP; the SP itself when group_size = 1, so that s = 1
// reproduces the input matrix). Off-diagonal blocks average all entries.
struct BlockMatrix {
  int groups = 0;
  int group_size = 0;
  std::vector<double> block;  // groups x groups, row-major
  std::vector<double> sp;     // per group

  double at(int row, int col) const { return block.at(row * groups + col); }
};

BlockMatrix BlockAverage(const XpMatrix& matrix, int group_size);

enum class SpreadConvention { kStandardDeviation, kStandardErrorOfMean };

struct TeamStats {
  double mean = 0.0;
  double spread = 0.0;
  int team_count = 0;
  std::vector<double> scores;
};

// s! / (s - n)!.
long long CrossSeedTeamCount(int num_players, int num_seeds);

// Scores every team in which each seat takes its local policy from a
// different seed (ordered assignments of distinct seeds to seats). Policies
// are greedified first. The spread is the sample standard deviation over team
// scores by default.
TeamStats CrossSeedTeams(
    const DecPomdp& env, std::span<const TabularJointPolicy> seeds,
    const EvalOptions& options = {}, double tie_epsilon = kDefaultTieEpsilon,
    SpreadConvention spread = SpreadConvention::kStandardDeviation);

struct GroupReport {
  std::string label;
  double alpha = 0.0;
  std::string config_digest;
  int size = 0;
  double sp_mean = 0.0;
  double sp_spread = 0.0;
  bool has_xp = false;
  TeamStats xp;
};

struct XpReport {
  XpMatrix matrix;
  bool has_blocks = false;
  BlockMatrix blocks;
  std::vector<GroupReport> groups;
  std::vector<std::string> notes;
};

// Full report for a population ordered in groups (sizes may differ; the block
// matrix is only produced when they are all equal).
XpReport BuildXpReport(const DecPomdp& env,
                       const std::vector<std::vector<TabularJointPolicy>>& groups,
                       const XpMatrixOptions& options = {});

}  // namespace xplab

#endif  // XPLAB_EVAL_H_
