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

#ifndef XPLAB_TRAIN_H_
#define XPLAB_TRAIN_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "xplab/dec_pomdp.h"
#include "xplab/policy.h"

namespace xplab {

class DivergenceError : public XplabError {
 public:
  using XplabError::XplabError;
};

enum class ScheduleKind { kConstant, kHarmonic };
enum class BaselineKind { kNone, kBatchMean, kPerAohEma };
enum class AdvantageMode { kMonteCarlo, kLambdaCritic };
enum class GradientMode { kSampled, kExact };
enum class Parametrization { kIndependent, kSharedSymmetric };

// Step size at (1-based) iteration k:
//   constant: learning_rate
//   harmonic: learning_rate / (k + offset); learning_rate = 1, offset = 0 is
//   the plain k^{-1} schedule.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double learning_rate = 0.05;
  double offset = 0.0;

  double Rate(int k) const;
};

struct TrainConfig {
  double entropy_coefficient = 0.0;
  int batch_size = 32;
  int iterations = 3000;
  StepSchedule schedule;
  BaselineKind baseline = BaselineKind::kPerAohEma;
  double baseline_decay = 0.99;
  // Also subtract alpha * Ent(pi(.|tau)), the expectation of the
  // -alpha * log pi bonus, at each history. Unbiased; off by default.
  bool entropy_baseline = false;
  AdvantageMode advantage_mode = AdvantageMode::kMonteCarlo;
  double lambda = 1.0;
  double critic_lr = 0.1;
  std::uint64_t seed = 0;
  double init_noise_scale = 0.0;
  double grad_clip = 100.0;
  GradientMode gradient = GradientMode::kSampled;
  Parametrization parametrization = Parametrization::kIndependent;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Strict: unknown keys and wrong types throw ConfigError naming the key.
  static TrainConfig FromJson(const nlohmann::json& doc);
  // Hex digest of the canonical JSON with the seed removed, so that seeds of
  // one configuration share a digest.
  std::string Digest() const;
};

// Per-agent value table V^i(tau^i); unknown histories read as 0.
class TabularCritic {
 public:
  TabularCritic() = default;
  explicit TabularCritic(int num_agents) : values_(num_agents) {}

  int num_agents() const { return static_cast<int>(values_.size()); }
  double Value(int agent, const std::string& key) const;
  bool Contains(int agent, const std::string& key) const;
  void Set(int agent, const std::string& key, double value);
  const std::map<std::string, double>& agent(int i) const {
    return values_.at(i);
  }

 private:
  std::vector<std::map<std::string, double>> values_;
};

// Mutable state the estimator reads: EMA baselines and the critic. Neither
// depends on the batch being scored.
struct EstimatorState {
  TabularCritic ema_baseline;
  TabularCritic critic;
  int iteration = 0;  // for error messages only
};

// Sampled entropy-regularized policy gradient. Batch mean over trajectories of
//   sum_t sum_i grad log pi^i(a^i_t | tau^i_t) *
//       (A^i_t - alpha * log pi^i(a^i_t | tau^i_t)),
// with A^i_t = G_t - b (monte carlo) or the lambda-weighted critic advantage.
// For a softmax table, grad log pi(a | tau) = one_hot(a) - pi(. | tau) on the
// logits of tau. Throws XplabError on a malformed batch and DivergenceError on
// non-finite values.
ParameterTable GradEstimate(const DecPomdp& env, const TabularJointPolicy& policy,
                            const TrainConfig& config,
                            std::span<const Trajectory> batch,
                            const EstimatorState& state = {});

// Exact expectation of GradEstimate under the policy's own trajectory
// distribution, for baselines that do not depend on the batch (none,
// per-AOH EMA) and for lambda-critic advantages.
ParameterTable ExpectedGradEstimate(const DecPomdp& env,
                                    const TabularJointPolicy& policy,
                                    const TrainConfig& config,
                                    const EstimatorState& state = {},
                                    std::size_t node_budget = kDefaultNodeBudget);

// Exact expectation of the estimator with no baseline: the regularized
// gradient grad J_SP + alpha * E[sum_t grad Ent(pi(.|tau_t))], where the
// gradient of the entropy is taken inside the expectation.
ParameterTable ExactGradient(const DecPomdp& env, const TabularJointPolicy& policy,
                             double alpha,
                             std::size_t node_budget = kDefaultNodeBudget);

// Objective whose gradient at theta_ref equals ExactGradient(theta_ref):
//   J_SP(pi_theta) + alpha * E_{tau ~ pi_ref}[sum_t Ent(pi_theta(. | tau_t))].
// The visitation distribution is frozen at the reference policy.
double RegularizedSurrogate(const DecPomdp& env,
                            const TabularJointPolicy& reference,
                            const TabularJointPolicy& policy, double alpha,
                            std::size_t node_budget = kDefaultNodeBudget);

// J_SP(pi) + alpha * E_{tau ~ pi}[sum_t Ent(pi(. | tau_t))]. Its gradient
// matches ExactGradient only when the policy cannot change which histories
// are visited (e.g. one-step games).
double RegularizedReturn(const DecPomdp& env, const TabularJointPolicy& policy,
                         double alpha,
                         std::size_t node_budget = kDefaultNodeBudget);

// Lambda-weighted advantages, per step and agent:
//   delta_t = r_t + gamma V(tau^i_{t+1}) - V(tau^i_t),  V(terminal) = 0,
//   A_t = delta_t + gamma lambda A_{t+1}.
std::vector<std::vector<double>> CriticAdvantages(const Trajectory& trajectory,
                                                  const TabularCritic& critic,
                                                  double gamma, double lambda);

// V^i(tau^i_t) = E[G_t | tau^i_t] under the policy, by enumeration.
TabularCritic ExactCritic(const DecPomdp& env, const TabularJointPolicy& policy,
                          std::size_t node_budget = kDefaultNodeBudget);

struct TrainingLogRow {
  int iteration;
  double sp_estimate;
  double mean_entropy;
  double grad_norm;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
};

struct TrainResult {
  TabularJointPolicy policy;
  TrainingLog log;
  TabularCritic critic;
  // Only meaningful for Parametrization::kSharedSymmetric.
  SharedSymmetricPolicy shared;
};

// Runs `iterations` rounds of sample batch -> gradient -> ascent step. The
// returned policy carries the config digest, alpha and seed as provenance.
// `initial_critic`, when given, seeds the lambda-critic table (set
// critic_lr = 0 to freeze it). Throws DivergenceError with the last finite
// log row if logits become non-finite.
TrainResult Train(const EnvPtr& env, const TrainConfig& config,
                  const TabularCritic* initial_critic = nullptr);

struct SweepEntry {
  int alpha_index = 0;
  int seed_index = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  TabularJointPolicy policy;
  double greedy_sp = 0.0;
  double sampled_sp = 0.0;
  // "agent:key=label" per multi-action AOH; ties joined with '+'.
  std::vector<std::string> argmax_labels;
};

struct SweepResult {
  std::vector<SweepEntry> entries;  // ordered by (alpha index, seed index)
};

// Trains seeds_per_alpha policies per alpha. Cell (a, s) uses seed
// DeriveSeed(config_template.seed, a, s), so results do not depend on
// `threads`.
SweepResult SweepAlpha(const EnvPtr& env, const std::vector<double>& alphas,
                       int seeds_per_alpha, const TrainConfig& config_template,
                       int threads = 1);

// Argmax labels of every multi-action AOH registered in the policy.
std::vector<std::string> ArgmaxLabels(const DecPomdp& env,
                                      const TabularJointPolicy& policy,
                                      double tie_epsilon = kDefaultTieEpsilon);

// Deterministic parallel-for over [0, n). Exceptions from tasks are
// rethrown on the calling thread (first index wins).
void ParallelFor(int n, int threads, const std::function<void(int)>& body);

}  // namespace xplab

#endif  // XPLAB_TRAIN_H_
