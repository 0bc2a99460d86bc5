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

#include "xplab/train.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <set>
#include <thread>
#include <unordered_map>
#include <utility>

#include <fmt/format.h>

#include "xplab/eval.h"
#include "xplab/util.h"

namespace xplab {

double StepSchedule::Rate(int k) const {
  if (kind == ScheduleKind::kConstant) return learning_rate;
  return learning_rate / (static_cast<double>(k) + offset);
}

void TrainConfig::Validate() const {
  if (!(entropy_coefficient >= 0.0) || !std::isfinite(entropy_coefficient)) {
    throw ConfigError("'train.entropy_coefficient' must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("'train.batch_size' must be >= 1");
  if (iterations < 1) throw ConfigError("'train.iterations' must be >= 1");
  if (!(schedule.learning_rate > 0.0)) {
    throw ConfigError("'train.schedule.learning_rate' must be > 0");
  }
  if (schedule.kind == ScheduleKind::kHarmonic && !(schedule.offset > -1.0)) {
    throw ConfigError("'train.schedule.offset' must be > -1");
  }
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) {
    throw ConfigError("'train.baseline.decay' must lie in [0, 1)");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("'train.advantage.lambda' must lie in [0, 1]");
  }
  if (!(critic_lr >= 0.0)) throw ConfigError("'train.advantage.critic_lr' must be >= 0");
  if (!(init_noise_scale >= 0.0)) {
    throw ConfigError("'train.init_noise_scale' must be >= 0");
  }
  if (!(grad_clip > 0.0)) throw ConfigError("'train.grad_clip' must be > 0");
}

namespace {

const char* ScheduleName(ScheduleKind k) {
  return k == ScheduleKind::kConstant ? "constant" : "harmonic";
}
const char* BaselineName(BaselineKind k) {
  switch (k) {
    case BaselineKind::kNone: return "none";
    case BaselineKind::kBatchMean: return "batch_mean";
    case BaselineKind::kPerAohEma: return "per_aoh_ema";
  }
  return "";
}

void RejectUnknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                   const std::string& where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(fmt::format("unknown key '{}.{}'", where, key));
    }
  }
}

template <typename T>
T Get(const nlohmann::json& obj, const std::string& key, const std::string& where,
      T fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  const std::string path = where + "." + key;
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", path));
    return v.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw ConfigError(fmt::format("'{}' must be an integer", path));
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned() || v.get<long long>() >= 0) return v.get<T>();
      throw ConfigError(fmt::format("'{}' must be non-negative", path));
    } else {
      return v.get<T>();
    }
  } else {
    if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", path));
    return v.get<T>();
  }
}

}  // namespace

nlohmann::json TrainConfig::ToJson() const {
  nlohmann::json j;
  j["entropy_coefficient"] = entropy_coefficient;
  j["batch_size"] = batch_size;
  j["iterations"] = iterations;
  j["schedule"] = {{"kind", ScheduleName(schedule.kind)},
                   {"learning_rate", schedule.learning_rate},
                   {"offset", schedule.offset}};
  j["baseline"] = {{"kind", BaselineName(baseline)},
                   {"decay", baseline_decay},
                   {"entropy", entropy_baseline}};
  j["advantage"] = {
      {"mode", advantage_mode == AdvantageMode::kMonteCarlo ? "monte_carlo"
                                                            : "lambda_critic"},
      {"lambda", lambda},
      {"critic_lr", critic_lr}};
  j["seed"] = seed;
  j["init_noise_scale"] = init_noise_scale;
  j["grad_clip"] = grad_clip;
  j["gradient"] = gradient == GradientMode::kSampled ? "sampled" : "exact";
  j["parametrization"] = parametrization == Parametrization::kIndependent
                             ? "independent"
                             : "shared_symmetric";
  return j;
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& doc) {
  const std::string w = "train";
  RejectUnknown(doc, {"entropy_coefficient", "batch_size", "iterations", "schedule",
                      "baseline", "advantage", "seed", "init_noise_scale",
                      "grad_clip", "gradient", "parametrization"},
                w);
  TrainConfig c;
  c.entropy_coefficient = Get(doc, "entropy_coefficient", w, c.entropy_coefficient);
  c.batch_size = Get(doc, "batch_size", w, c.batch_size);
  c.iterations = Get(doc, "iterations", w, c.iterations);
  if (doc.contains("schedule")) {
    const auto& s = doc["schedule"];
    RejectUnknown(s, {"kind", "learning_rate", "offset"}, "train.schedule");
    const auto kind = Get<std::string>(s, "kind", "train.schedule", "constant");
    if (kind == "constant") {
      c.schedule.kind = ScheduleKind::kConstant;
    } else if (kind == "harmonic") {
      c.schedule.kind = ScheduleKind::kHarmonic;
      c.schedule.learning_rate = 1.0;
    } else {
      throw ConfigError(fmt::format("'train.schedule.kind' has unknown value '{}'", kind));
    }
    c.schedule.learning_rate =
        Get(s, "learning_rate", "train.schedule", c.schedule.learning_rate);
    c.schedule.offset = Get(s, "offset", "train.schedule", c.schedule.offset);
  }
  if (doc.contains("baseline")) {
    const auto& b = doc["baseline"];
    RejectUnknown(b, {"kind", "decay", "entropy"}, "train.baseline");
    const auto kind = Get<std::string>(b, "kind", "train.baseline", "per_aoh_ema");
    if (kind == "none") {
      c.baseline = BaselineKind::kNone;
    } else if (kind == "batch_mean") {
      c.baseline = BaselineKind::kBatchMean;
    } else if (kind == "per_aoh_ema") {
      c.baseline = BaselineKind::kPerAohEma;
    } else {
      throw ConfigError(fmt::format("'train.baseline.kind' has unknown value '{}'", kind));
    }
    c.baseline_decay = Get(b, "decay", "train.baseline", c.baseline_decay);
    if (b.contains("entropy")) {
      if (!b["entropy"].is_boolean()) {
        throw ConfigError("'train.baseline.entropy' must be a boolean");
      }
      c.entropy_baseline = b["entropy"].get<bool>();
    }
  }
  if (doc.contains("advantage")) {
    const auto& a = doc["advantage"];
    RejectUnknown(a, {"mode", "lambda", "critic_lr"}, "train.advantage");
    const auto mode = Get<std::string>(a, "mode", "train.advantage", "monte_carlo");
    if (mode == "monte_carlo") {
      c.advantage_mode = AdvantageMode::kMonteCarlo;
    } else if (mode == "lambda_critic") {
      c.advantage_mode = AdvantageMode::kLambdaCritic;
    } else {
      throw ConfigError(fmt::format("'train.advantage.mode' has unknown value '{}'", mode));
    }
    c.lambda = Get(a, "lambda", "train.advantage", c.lambda);
    c.critic_lr = Get(a, "critic_lr", "train.advantage", c.critic_lr);
  }
  c.seed = Get(doc, "seed", w, c.seed);
  c.init_noise_scale = Get(doc, "init_noise_scale", w, c.init_noise_scale);
  c.grad_clip = Get(doc, "grad_clip", w, c.grad_clip);
  const auto gradient = Get<std::string>(doc, "gradient", w, "sampled");
  if (gradient == "sampled") {
    c.gradient = GradientMode::kSampled;
  } else if (gradient == "exact") {
    c.gradient = GradientMode::kExact;
  } else {
    throw ConfigError(fmt::format("'train.gradient' has unknown value '{}'", gradient));
  }
  const auto param = Get<std::string>(doc, "parametrization", w, "independent");
  if (param == "independent") {
    c.parametrization = Parametrization::kIndependent;
  } else if (param == "shared_symmetric") {
    c.parametrization = Parametrization::kSharedSymmetric;
  } else {
    throw ConfigError(fmt::format("'train.parametrization' has unknown value '{}'", param));
  }
  c.Validate();
  return c;
}

std::string TrainConfig::Digest() const {
  auto j = ToJson();
  j.erase("seed");
  return HexDigest(j.dump());
}

double TabularCritic::Value(int agent, const std::string& key) const {
  const auto& t = values_.at(agent);
  auto it = t.find(key);
  return it == t.end() ? 0.0 : it->second;
}

bool TabularCritic::Contains(int agent, const std::string& key) const {
  return values_.at(agent).count(key) > 0;
}

void TabularCritic::Set(int agent, const std::string& key, double value) {
  values_.at(agent)[key] = value;
}

std::vector<std::vector<double>> CriticAdvantages(const Trajectory& trajectory,
                                                  const TabularCritic& critic,
                                                  double gamma, double lambda) {
  const int len = trajectory.Length();
  std::vector<std::vector<double>> adv(len);
  if (len == 0) return adv;
  const int n = static_cast<int>(trajectory.steps[0].aoh_keys.size());
  const double decay = gamma * lambda;
  std::vector<double> next_adv(n, 0.0);
  for (int t = len - 1; t >= 0; --t) {
    const Step& step = trajectory.steps[t];
    adv[t].resize(n);
    for (int i = 0; i < n; ++i) {
      const double v = critic.num_agents() ? critic.Value(i, step.aoh_keys[i]) : 0.0;
      const double v_next =
          (t + 1 < len && critic.num_agents())
              ? critic.Value(i, trajectory.steps[t + 1].aoh_keys[i])
              : 0.0;
      const double delta = step.reward + gamma * v_next - v;
      adv[t][i] = delta + decay * next_adv[i];
    }
    next_adv = adv[t];
  }
  return adv;
}

namespace {

struct LocalDist {
  std::vector<double> probs;
  std::vector<double> log_probs;
  double entropy = 0.0;
};

// Accumulates the per-trajectory estimator, scaled by `weight`, into `grad`.
class EstimatorAccumulator {
 public:
  EstimatorAccumulator(const DecPomdp& env, const TabularJointPolicy& policy,
                       const TrainConfig& config, const EstimatorState& state)
      : env_(env), policy_(policy), config_(config), state_(state),
        grad_(env.num_agents) {}

  void Add(const Trajectory& traj, double weight,
           const std::vector<double>* batch_baseline) {
    const int n = env_.num_agents;
    const double alpha = config_.entropy_coefficient;
    const auto returns = traj.ReturnsToGo(env_.discount);
    std::vector<std::vector<double>> adv;
    const bool use_critic = config_.advantage_mode == AdvantageMode::kLambdaCritic;
    if (use_critic) {
      adv = CriticAdvantages(traj, state_.critic, env_.discount, config_.lambda);
    }
    for (int t = 0; t < traj.Length(); ++t) {
      const Step& step = traj.steps[t];
      if (static_cast<int>(step.aoh_keys.size()) != n ||
          static_cast<int>(step.choice.size()) != n ||
          static_cast<int>(step.num_legal.size()) != n) {
        throw XplabError(fmt::format(
            "batch step {} does not cover the environment's {} agents", t, n));
      }
      for (int i = 0; i < n; ++i) {
        const int num = step.num_legal[i];
        const int c = step.choice[i];
        if (c < 0 || c >= num) {
          throw XplabError(fmt::format("batch step {} agent {} chose slot {} of {}",
                                       t, i, c, num));
        }
        if (num == 1) continue;
        const LocalDist& d = Dist(i, step.aoh_keys[i], num);
        double a;
        if (use_critic) {
          a = adv[t][i];
        } else {
          double b = 0.0;
          if (config_.baseline == BaselineKind::kBatchMean) {
            b = batch_baseline ? (*batch_baseline)[t] : 0.0;
          } else if (config_.baseline == BaselineKind::kPerAohEma &&
                     state_.ema_baseline.num_agents()) {
            b = state_.ema_baseline.Value(i, step.aoh_keys[i]);
          }
          a = returns[t] - b;
        }
        double bonus = -alpha * d.log_probs[c];
        if (config_.entropy_baseline) bonus -= alpha * d.entropy;
        const double w = weight * (a + bonus);
        if (!std::isfinite(w)) {
          throw DivergenceError(fmt::format(
              "non-finite gradient weight at iteration {} (agent {}, history '{}')",
              state_.iteration, i, step.aoh_keys[i]));
        }
        auto& g = grad_.At(i, step.aoh_keys[i], num);
        for (int k = 0; k < num; ++k) g[k] -= d.probs[k] * w;
        g[c] += w;
      }
    }
  }

  ParameterTable Take() { return std::move(grad_); }

 private:
  const LocalDist& Dist(int agent, const std::string& key, int num) {
    auto& cache = cache_[agent];
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    LocalDist d;
    d.log_probs = policy_.ActionLogProbs(agent, key, num);
    d.probs.resize(num);
    for (int k = 0; k < num; ++k) {
      d.probs[k] = std::exp(d.log_probs[k]);
      if (d.probs[k] > 0.0) d.entropy -= d.probs[k] * d.log_probs[k];
    }
    return cache.emplace(key, std::move(d)).first->second;
  }

  const DecPomdp& env_;
  const TabularJointPolicy& policy_;
  const TrainConfig& config_;
  const EstimatorState& state_;
  ParameterTable grad_;
  std::map<int, std::unordered_map<std::string, LocalDist>> cache_;
};

}  // namespace

ParameterTable GradEstimate(const DecPomdp& env, const TabularJointPolicy& policy,
                            const TrainConfig& config,
                            std::span<const Trajectory> batch,
                            const EstimatorState& state) {
  if (batch.empty()) throw XplabError("gradient estimate needs a non-empty batch");
  std::vector<double> batch_mean;
  if (config.advantage_mode == AdvantageMode::kMonteCarlo &&
      config.baseline == BaselineKind::kBatchMean) {
    std::vector<double> count;
    for (const auto& traj : batch) {
      const auto g = traj.ReturnsToGo(env.discount);
      if (g.size() > batch_mean.size()) {
        batch_mean.resize(g.size(), 0.0);
        count.resize(g.size(), 0.0);
      }
      for (std::size_t t = 0; t < g.size(); ++t) {
        batch_mean[t] += g[t];
        count[t] += 1.0;
      }
    }
    for (std::size_t t = 0; t < batch_mean.size(); ++t) batch_mean[t] /= count[t];
  }
  EstimatorAccumulator acc(env, policy, config, state);
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& traj : batch) acc.Add(traj, w, &batch_mean);
  auto grad = acc.Take();
  if (!grad.AllFinite()) {
    throw DivergenceError(
        fmt::format("non-finite gradient at iteration {}", state.iteration));
  }
  return grad;
}

ParameterTable ExpectedGradEstimate(const DecPomdp& env,
                                    const TabularJointPolicy& policy,
                                    const TrainConfig& config,
                                    const EstimatorState& state,
                                    std::size_t node_budget) {
  if (config.advantage_mode == AdvantageMode::kMonteCarlo &&
      config.baseline == BaselineKind::kBatchMean) {
    throw XplabError("a batch-mean baseline has no batch-free expectation");
  }
  EstimatorAccumulator acc(env, policy, config, state);
  for (const auto& wt : EnumerateTrajectories(env, policy, node_budget)) {
    acc.Add(wt.trajectory, wt.probability, nullptr);
  }
  return acc.Take();
}

ParameterTable ExactGradient(const DecPomdp& env, const TabularJointPolicy& policy,
                             double alpha, std::size_t node_budget) {
  TrainConfig config;
  config.entropy_coefficient = alpha;
  config.baseline = BaselineKind::kNone;
  config.advantage_mode = AdvantageMode::kMonteCarlo;
  return ExpectedGradEstimate(env, policy, config, {}, node_budget);
}

namespace {

double ExpectedEntropySum(const DecPomdp& env,
                          const std::vector<WeightedTrajectory>& visits,
                          const TabularJointPolicy& policy, bool discounted) {
  double total = 0.0;
  for (const auto& wt : visits) {
    double w = 1.0;
    double h = 0.0;
    for (const auto& step : wt.trajectory.steps) {
      for (int i = 0; i < env.num_agents; ++i) {
        if (step.num_legal[i] > 1) {
          h += w * Entropy(policy.ActionProbs(i, step.aoh_keys[i], step.num_legal[i]));
        }
      }
      if (discounted) w *= env.discount;
    }
    total += wt.probability * h;
  }
  return total;
}

double ExpectedReturn(const DecPomdp& env,
                      const std::vector<WeightedTrajectory>& visits) {
  double j = 0.0;
  for (const auto& wt : visits) j += wt.probability * wt.trajectory.Return(env.discount);
  return j;
}

}  // namespace

double RegularizedSurrogate(const DecPomdp& env,
                            const TabularJointPolicy& reference,
                            const TabularJointPolicy& policy, double alpha,
                            std::size_t node_budget) {
  const auto own = EnumerateTrajectories(env, policy, node_budget);
  const auto ref = EnumerateTrajectories(env, reference, node_budget);
  return ExpectedReturn(env, own) + alpha * ExpectedEntropySum(env, ref, policy, false);
}

double RegularizedReturn(const DecPomdp& env, const TabularJointPolicy& policy,
                         double alpha, std::size_t node_budget) {
  const auto own = EnumerateTrajectories(env, policy, node_budget);
  return ExpectedReturn(env, own) + alpha * ExpectedEntropySum(env, own, policy, false);
}

TabularCritic ExactCritic(const DecPomdp& env, const TabularJointPolicy& policy,
                          std::size_t node_budget) {
  std::vector<std::map<std::string, std::pair<double, double>>> acc(env.num_agents);
  for (const auto& wt : EnumerateTrajectories(env, policy, node_budget)) {
    const auto g = wt.trajectory.ReturnsToGo(env.discount);
    for (int t = 0; t < wt.trajectory.Length(); ++t) {
      for (int i = 0; i < env.num_agents; ++i) {
        auto& [num, den] = acc[i][wt.trajectory.steps[t].aoh_keys[i]];
        num += wt.probability * g[t];
        den += wt.probability;
      }
    }
  }
  TabularCritic critic(env.num_agents);
  for (int i = 0; i < env.num_agents; ++i) {
    for (const auto& [key, nd] : acc[i]) critic.Set(i, key, nd.first / nd.second);
  }
  return critic;
}

namespace {

std::string RowText(const TrainingLogRow& r) {
  return fmt::format("iteration={} sp_estimate={:.6g} mean_entropy={:.6g} grad_norm={:.6g}",
                     r.iteration, r.sp_estimate, r.mean_entropy, r.grad_norm);
}

[[noreturn]] void Diverged(const TrainingLog& log, int iteration,
                           const std::string& what) {
  std::string msg = fmt::format("training diverged at iteration {}: {}", iteration, what);
  if (!log.rows.empty()) msg += "; last finite log: " + RowText(log.rows.back());
  throw DivergenceError(msg);
}

// Batch-mean of `values` per (agent, key) visit.
using VisitMeans = std::vector<std::map<std::string, std::pair<double, int>>>;

}  // namespace

TrainResult Train(const EnvPtr& env_ptr, const TrainConfig& config,
                  const TabularCritic* initial_critic) {
  config.Validate();
  const DecPomdp& env = *env_ptr;
  const int n = env.num_agents;
  TrainResult result;
  const std::uint64_t init_seed = DeriveSeed(config.seed, 0x1a17);
  if (config.parametrization == Parametrization::kSharedSymmetric) {
    if (config.init_noise_scale > 0.0) {
      std::mt19937_64 rng(init_seed);
      std::normal_distribution<double> gauss(0.0, config.init_noise_scale);
      result.shared.theta1 = gauss(rng);
      result.shared.theta2 = gauss(rng);
    }
    result.policy = result.shared.ToJointPolicy(env);
  } else {
    result.policy = TabularJointPolicy(n);
  }
  result.policy.RegisterAll(env, config.parametrization == Parametrization::kIndependent
                                     ? config.init_noise_scale
                                     : 0.0,
                            init_seed);
  auto& prov = result.policy.mutable_provenance();
  prov.env_name = env.name;
  prov.alpha = config.entropy_coefficient;
  prov.seed = config.seed;
  prov.config_digest = config.Digest();
  prov.label = fmt::format("alpha={:g} seed={}", config.entropy_coefficient, config.seed);

  EstimatorState state;
  state.ema_baseline = TabularCritic(n);
  state.critic = initial_critic ? *initial_critic : TabularCritic(n);
  if (state.critic.num_agents() != n) {
    throw XplabError("initial critic covers a different number of agents");
  }
  const bool use_critic = config.advantage_mode == AdvantageMode::kLambdaCritic;
  TrainConfig exact_config = config;
  if (exact_config.baseline == BaselineKind::kBatchMean) {
    exact_config.baseline = BaselineKind::kNone;
  }

  std::mt19937_64 rng(config.seed);
  std::vector<Trajectory> batch(config.batch_size);
  for (int k = 1; k <= config.iterations; ++k) {
    state.iteration = k;
    ParameterTable grad;
    TrainingLogRow row{k, 0.0, 0.0, 0.0};
    double entropy_sum = 0.0;
    double entropy_weight = 0.0;
    try {
      if (config.gradient == GradientMode::kSampled) {
        for (auto& traj : batch) traj = Rollout(env, result.policy, rng);
        grad = GradEstimate(env, result.policy, config, batch, state);
        for (const auto& traj : batch) {
          row.sp_estimate += traj.Return(env.discount) / batch.size();
          for (const auto& step : traj.steps) {
            for (int i = 0; i < n; ++i) {
              if (step.num_legal[i] < 2) continue;
              entropy_sum += PolicyEntropy(result.policy, i, step.aoh_keys[i],
                                           step.num_legal[i]);
              entropy_weight += 1.0;
            }
          }
        }
      } else {
        grad = ExpectedGradEstimate(env, result.policy, exact_config, state);
        for (const auto& wt : EnumerateTrajectories(env, result.policy)) {
          row.sp_estimate += wt.probability * wt.trajectory.Return(env.discount);
          for (const auto& step : wt.trajectory.steps) {
            for (int i = 0; i < n; ++i) {
              if (step.num_legal[i] < 2) continue;
              entropy_sum += wt.probability * PolicyEntropy(result.policy, i,
                                                            step.aoh_keys[i],
                                                            step.num_legal[i]);
              entropy_weight += wt.probability;
            }
          }
        }
      }
    } catch (const DivergenceError& e) {
      Diverged(result.log, k, e.what());
    }
    row.mean_entropy = entropy_weight > 0.0 ? entropy_sum / entropy_weight : 0.0;
    const double lr = config.schedule.Rate(k);

    if (config.parametrization == Parametrization::kSharedSymmetric) {
      auto [d1, d2] = result.shared.ProjectGradient(env, grad);
      const double norm = std::hypot(d1, d2);
      row.grad_norm = norm;
      if (!std::isfinite(norm)) Diverged(result.log, k, "non-finite gradient norm");
      if (norm > config.grad_clip) {
        d1 *= config.grad_clip / norm;
        d2 *= config.grad_clip / norm;
      }
      result.shared.theta1 += lr * d1;
      result.shared.theta2 += lr * d2;
      auto next = result.shared.ToJointPolicy(env);
      next.mutable_provenance() = result.policy.provenance();
      result.policy = std::move(next);
    } else {
      const double norm = grad.Norm();
      row.grad_norm = norm;
      if (!std::isfinite(norm)) Diverged(result.log, k, "non-finite gradient norm");
      if (norm > config.grad_clip) grad.Scale(config.grad_clip / norm);
      result.policy.mutable_logits().AddScaled(grad, lr);
    }
    if (!result.policy.logits().AllFinite()) {
      Diverged(result.log, k, "non-finite logits");
    }

    if (config.gradient == GradientMode::kSampled) {
      // Baseline and critic updates use the pre-update estimator state.
      VisitMeans returns(n);
      VisitMeans advantages(n);
      for (const auto& traj : batch) {
        const auto g = traj.ReturnsToGo(env.discount);
        std::vector<std::vector<double>> adv;
        if (use_critic) {
          adv = CriticAdvantages(traj, state.critic, env.discount, config.lambda);
        }
        for (int t = 0; t < traj.Length(); ++t) {
          for (int i = 0; i < n; ++i) {
            const auto& key = traj.steps[t].aoh_keys[i];
            auto& r = returns[i][key];
            r.first += g[t];
            r.second += 1;
            if (use_critic) {
              auto& a = advantages[i][key];
              a.first += adv[t][i];
              a.second += 1;
            }
          }
        }
      }
      if (config.baseline == BaselineKind::kPerAohEma && !use_critic) {
        for (int i = 0; i < n; ++i) {
          for (const auto& [key, sum_count] : returns[i]) {
            const double mean = sum_count.first / sum_count.second;
            const double next =
                state.ema_baseline.Contains(i, key)
                    ? config.baseline_decay * state.ema_baseline.Value(i, key) +
                          (1.0 - config.baseline_decay) * mean
                    : mean;
            state.ema_baseline.Set(i, key, next);
          }
        }
      }
      if (use_critic && config.critic_lr > 0.0) {
        for (int i = 0; i < n; ++i) {
          for (const auto& [key, sum_count] : advantages[i]) {
            state.critic.Set(i, key,
                             state.critic.Value(i, key) +
                                 config.critic_lr * sum_count.first / sum_count.second);
          }
        }
      }
    }
    result.log.rows.push_back(row);
  }
  result.critic = std::move(state.critic);
  return result;
}

void ParallelFor(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(threads, n);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

Aoh ParseAohKey(const DecPomdp& env, int agent, const std::string& key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto bar = key.find('|', start);
    parts.push_back(key.substr(start, bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  auto lookup = [&](const std::vector<std::string>& labels, const std::string& l) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == l) return static_cast<int>(i);
    }
    throw XplabError(fmt::format("unknown label '{}' in history '{}'", l, key));
  };
  Aoh aoh;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (p % 2 == 0) {
      aoh.observations.push_back(lookup(env.observation_labels[agent], parts[p]));
    } else {
      aoh.actions.push_back(lookup(env.action_labels[agent], parts[p]));
    }
  }
  return aoh;
}

}  // namespace

std::vector<std::string> ArgmaxLabels(const DecPomdp& env,
                                      const TabularJointPolicy& policy,
                                      double tie_epsilon) {
  std::vector<std::string> out;
  for (int i = 0; i < policy.num_agents(); ++i) {
    for (const auto& [key, logits] : policy.logits().agent(i)) {
      if (logits.size() < 2) continue;
      const auto legal = env.legal_actions(i, ParseAohKey(env, i, key));
      const auto greedy = GreedyProbs(Softmax(logits), tie_epsilon);
      std::string labels;
      for (std::size_t a = 0; a < greedy.size(); ++a) {
        if (greedy[a] <= 0.0) continue;
        if (!labels.empty()) labels += '+';
        labels += env.action_labels[i][legal.at(a)];
      }
      out.push_back(fmt::format("{}:{}={}", i, key, labels));
    }
  }
  return out;
}

SweepResult SweepAlpha(const EnvPtr& env, const std::vector<double>& alphas,
                       int seeds_per_alpha, const TrainConfig& config_template,
                       int threads) {
  if (alphas.empty()) throw ConfigError("'sweep.alphas' must not be empty");
  if (seeds_per_alpha < 1) throw ConfigError("'sweep.seeds_per_alpha' must be >= 1");
  const int cells = static_cast<int>(alphas.size()) * seeds_per_alpha;
  SweepResult result;
  result.entries.resize(cells);
  ParallelFor(cells, threads, [&](int cell) {
    const int a = cell / seeds_per_alpha;
    const int s = cell % seeds_per_alpha;
    TrainConfig config = config_template;
    config.entropy_coefficient = alphas[a];
    config.seed = DeriveSeed(config_template.seed, a, s);
    auto trained = Train(env, config);
    SweepEntry& e = result.entries[cell];
    e.alpha_index = a;
    e.seed_index = s;
    e.alpha = alphas[a];
    e.seed = config.seed;
    e.policy = std::move(trained.policy);
    e.policy.mutable_provenance().label =
        fmt::format("alpha={:g} seed#{}", alphas[a], s);
    e.sampled_sp = SpScore(*env, e.policy).mean;
    e.greedy_sp = SpScore(*env, TieToleranceGreedify(e.policy, kDefaultTieEpsilon)).mean;
    e.argmax_labels = ArgmaxLabels(*env, e.policy);
  });
  return result;
}

}  // namespace xplab
