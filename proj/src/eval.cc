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


#include "xplab/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "xplab/train.h"

namespace xplab {

namespace {

double SampleStd(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

Score SpScore(const DecPomdp& env, const TabularJointPolicy& policy,
              const EvalOptions& options) {
  Score score;
  if (options.mode == EvalMode::kExact) {
    for (const auto& wt : EnumerateTrajectories(env, policy, options.node_budget)) {
      score.mean += wt.probability * wt.trajectory.Return(env.discount);
    }
    return score;
  }
  if (options.games < 1) throw ConfigError("'eval.games' must be >= 1");
  std::mt19937_64 rng(options.seed);
  std::vector<double> returns(options.games);
  for (auto& r : returns) r = Rollout(env, policy, rng).Return(env.discount);
  score.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / options.games;
  score.standard_error = SampleStd(returns, score.mean) / std::sqrt(options.games);
  return score;
}

Score XpScore(const DecPomdp& env, std::span<const TabularJointPolicy> policies,
              const EvalOptions& options) {
  const int n = env.num_agents;
  if (static_cast<int>(policies.size()) != n) {
    throw XplabError(fmt::format("cross-play needs {} policies, got {}", n,
                                 policies.size()));
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  double var = 0.0;
  int count = 0;
  std::vector<const TabularJointPolicy*> seats(n);
  do {
    for (int i = 0; i < n; ++i) seats[i] = &policies[perm[i]];
    EvalOptions o = options;
    o.seed = DeriveSeed(options.seed, static_cast<std::uint64_t>(count));
    const Score s = SpScore(env, TabularJointPolicy::Compose(seats), o);
    total += s.mean;
    var += s.standard_error * s.standard_error;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {total / count, std::sqrt(var) / count};
}

XpMatrix BuildXpMatrix(const DecPomdp& env,
                       std::span<const TabularJointPolicy> population,
                       const XpMatrixOptions& options) {
  if (env.num_agents != 2) {
    throw XplabError("the pairwise cross-play matrix needs a two-agent environment");
  }
  const int size = static_cast<int>(population.size());
  std::vector<TabularJointPolicy> pop;
  pop.reserve(size);
  for (const auto& p : population) {
    pop.push_back(options.greedy_first ? TieToleranceGreedify(p, options.tie_epsilon)
                                       : p);
  }
  XpMatrix m;
  m.size = size;
  m.mode = options.eval.mode;
  m.games = options.eval.mode == EvalMode::kMonteCarlo ? options.eval.games : 0;
  for (int j = 0; j < size; ++j) {
    const auto& prov = population[j].provenance();
    m.labels.push_back(prov.label.empty() ? fmt::format("policy{}", j) : prov.label);
    m.alphas.push_back(prov.alpha);
    m.seeds.push_back(prov.seed);
  }
  m.values.assign(static_cast<std::size_t>(size) * size, 0.0);
  m.standard_errors.assign(m.values.size(), 0.0);
  ParallelFor(size * size, options.threads, [&](int cell) {
    const int j = cell / size;
    const int k = cell % size;
    const TabularJointPolicy* seats[2] = {&pop[j], &pop[k]};
    EvalOptions o = options.eval;
    o.seed = DeriveSeed(options.eval.seed, j, k);
    const Score s = SpScore(env, TabularJointPolicy::Compose(seats), o);
    m.values[cell] = s.mean;
    m.standard_errors[cell] = s.standard_error;
  });
  return m;
}

BlockMatrix BlockAverage(const XpMatrix& matrix, int group_size) {
  if (group_size < 1 || matrix.size % group_size != 0) {
    throw XplabError(fmt::format("matrix of size {} does not split into groups of {}",
                                 matrix.size, group_size));
  }
  BlockMatrix b;
  b.group_size = group_size;
  b.groups = matrix.size / group_size;
  b.block.assign(static_cast<std::size_t>(b.groups) * b.groups, 0.0);
  b.sp.assign(b.groups, 0.0);
  for (int g = 0; g < b.groups; ++g) {
    for (int h = 0; h < b.groups; ++h) {
      double sum = 0.0;
      int count = 0;
      for (int j = g * group_size; j < (g + 1) * group_size; ++j) {
        for (int k = h * group_size; k < (h + 1) * group_size; ++k) {
          if (g == h && j == k) {
            b.sp[g] += matrix.at(j, k) / group_size;
            continue;
          }
          sum += matrix.at(j, k);
          ++count;
        }
      }
      // A 1x1 diagonal block has no cross-seed entries; it reports the SP.
      b.block[g * b.groups + h] = count ? sum / count : b.sp[g];
    }
  }
  return b;
}

long long CrossSeedTeamCount(int num_players, int num_seeds) {
  if (num_players < 0 || num_seeds < num_players) return 0;
  long long count = 1;
  for (int k = num_seeds - num_players + 1; k <= num_seeds; ++k) {
    if (count > std::numeric_limits<long long>::max() / k) {
      throw XplabError("cross-seed team count overflows");
    }
    count *= k;
  }
  return count;
}

TeamStats CrossSeedTeams(const DecPomdp& env,
                         std::span<const TabularJointPolicy> seeds,
                         const EvalOptions& options, double tie_epsilon,
                         SpreadConvention spread) {
  const int n = env.num_agents;
  const int s = static_cast<int>(seeds.size());
  if (s < n) {
    throw XplabError(fmt::format(
        "cross-seed teams need at least {} seeds for {} players, got {}", n, n, s));
  }
  std::vector<TabularJointPolicy> greedy;
  greedy.reserve(s);
  for (const auto& p : seeds) greedy.push_back(TieToleranceGreedify(p, tie_epsilon));

  TeamStats stats;
  stats.team_count = static_cast<int>(CrossSeedTeamCount(n, s));
  stats.scores.reserve(stats.team_count);
  std::vector<int> seat(n, 0);
  std::vector<bool> used(s, false);
  std::vector<const TabularJointPolicy*> members(n);
  // Lexicographic enumeration of injective seat -> seed assignments.
  std::function<void(int)> visit = [&](int pos) {
    if (pos == n) {
      for (int i = 0; i < n; ++i) members[i] = &greedy[seat[i]];
      EvalOptions o = options;
      o.seed = DeriveSeed(options.seed, static_cast<std::uint64_t>(stats.scores.size()));
      stats.scores.push_back(SpScore(env, TabularJointPolicy::Compose(members), o).mean);
      return;
    }
    for (int k = 0; k < s; ++k) {
      if (used[k]) continue;
      used[k] = true;
      seat[pos] = k;
      visit(pos + 1);
      used[k] = false;
    }
  };
  visit(0);
  stats.mean = std::accumulate(stats.scores.begin(), stats.scores.end(), 0.0) /
               static_cast<double>(stats.scores.size());
  stats.spread = SampleStd(stats.scores, stats.mean);
  if (spread == SpreadConvention::kStandardErrorOfMean) {
    stats.spread /= std::sqrt(static_cast<double>(stats.scores.size()));
  }
  return stats;
}

XpReport BuildXpReport(const DecPomdp& env,
                       const std::vector<std::vector<TabularJointPolicy>>& groups,
                       const XpMatrixOptions& options) {
  XpReport report;
  std::vector<TabularJointPolicy> flat;
  bool equal_sizes = !groups.empty();
  for (const auto& g : groups) {
    if (g.empty()) throw XplabError("report groups must not be empty");
    equal_sizes = equal_sizes && g.size() == groups.front().size();
    flat.insert(flat.end(), g.begin(), g.end());
  }
  if (env.num_agents == 2) {
    report.matrix = BuildXpMatrix(env, flat, options);
    if (equal_sizes) {
      report.has_blocks = true;
      report.blocks = BlockAverage(report.matrix, static_cast<int>(groups.front().size()));
    } else {
      report.notes.push_back("groups differ in size; block matrix omitted");
    }
  } else {
    report.notes.push_back(fmt::format(
        "{}-agent environment; pairwise matrix omitted, cross-seed teams only",
        env.num_agents));
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    GroupReport gr;
    const auto& prov = groups[g].front().provenance();
    gr.alpha = prov.alpha;
    gr.config_digest = prov.config_digest;
    gr.label = fmt::format("alpha={:g}", prov.alpha);
    gr.size = static_cast<int>(groups[g].size());
    std::vector<double> sps;
    for (std::size_t k = 0; k < groups[g].size(); ++k) {
      EvalOptions o = options.eval;
      o.seed = DeriveSeed(options.eval.seed, 0x5b, g, k);
      const auto& p = groups[g][k];
      sps.push_back(SpScore(env,
                            options.greedy_first
                                ? TieToleranceGreedify(p, options.tie_epsilon)
                                : p,
                            o)
                        .mean);
    }
    gr.sp_mean = std::accumulate(sps.begin(), sps.end(), 0.0) / sps.size();
    gr.sp_spread = SampleStd(sps, gr.sp_mean);
    if (gr.size >= env.num_agents) {
      gr.has_xp = true;
      gr.xp = CrossSeedTeams(env, groups[g], options.eval, options.tie_epsilon);
    } else {
      report.notes.push_back(fmt::format(
          "group '{}' has {} seeds, fewer than {} players; no cross-seed teams",
          gr.label, gr.size, env.num_agents));
    }
    report.groups.push_back(std::move(gr));
  }
  return report;
}

}  // namespace xplab
