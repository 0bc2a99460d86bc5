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

#ifndef XPLAB_POLICY_H_
#define XPLAB_POLICY_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "xplab/dec_pomdp.h"

namespace xplab {

// Relative probability tolerance used when greedifying trained policies.
inline constexpr double kDefaultTieEpsilon = 1e-9;

std::vector<double> Softmax(std::span<const double> logits);
std::vector<double> LogSoftmax(std::span<const double> logits);
// Shannon entropy in nats; 0 * ln 0 counts as 0.
double Entropy(std::span<const double> probs);
// Uniform weight 1/K on every action with p >= (1 - epsilon) * max p.
std::vector<double> GreedyProbs(std::span<const double> probs,
                                double epsilon = 0.0);

// Per-agent tables keyed by AOH key, holding one vector per history. Used
// both for policy logits and for gradients of the same shape.
class ParameterTable {
 public:
  using AgentTable = std::map<std::string, std::vector<double>>;

  ParameterTable() = default;
  explicit ParameterTable(int num_agents) : tables_(num_agents) {}

  int num_agents() const { return static_cast<int>(tables_.size()); }
  const AgentTable& agent(int i) const { return tables_.at(i); }
  AgentTable& mutable_agent(int i) { return tables_.at(i); }

  const std::vector<double>* Find(int agent, const std::string& key) const;
  // Returns the entry, creating a zero vector of `size` if absent. Throws if
  // an existing entry has a different size.
  std::vector<double>& At(int agent, const std::string& key, int size);

  // this += scale * other, creating missing entries.
  void AddScaled(const ParameterTable& other, double scale);
  void Scale(double factor);
  double Norm() const;
  bool AllFinite() const;
  std::size_t NumEntries() const;

  // Shape-aware zero copy.
  ParameterTable ZerosLike() const;

  friend bool operator==(const ParameterTable&, const ParameterTable&) = default;

 private:
  std::vector<AgentTable> tables_;
};

// Where a policy came from. Stored in policy files so populations can be
// regrouped and checked for environment compatibility.
struct PolicyProvenance {
  std::string env_name;
  nlohmann::json env_config;  // reconstructs the environment; may be null
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string label;
};

// Tabular softmax joint policy: agent i plays
//   pi^i(a | tau) = exp(theta^i(a | tau)) / sum_b exp(theta^i(b | tau)).
// Logits of -inf encode zero probability (greedified policies).
//
// A lazy policy treats an unknown history as zero logits (uniform). A strict
// policy, e.g. one loaded from disk, throws MissingAohError instead.
class TabularJointPolicy {
 public:
  TabularJointPolicy() = default;
  explicit TabularJointPolicy(int num_agents, bool lazy = true)
      : logits_(num_agents), lazy_(lazy) {}

  int num_agents() const { return logits_.num_agents(); }
  bool lazy() const { return lazy_; }
  void set_lazy(bool lazy) { lazy_ = lazy; }

  const ParameterTable& logits() const { return logits_; }
  ParameterTable& mutable_logits() { return logits_; }

  std::vector<double> ActionProbs(int agent, const std::string& key,
                                  int num_actions) const;
  std::vector<double> ActionLogProbs(int agent, const std::string& key,
                                     int num_actions) const;
  std::vector<double>& MutableLogits(int agent, const std::string& key,
                                     int num_actions) {
    return logits_.At(agent, key, num_actions);
  }

  // Registers every AOH reachable under some legal joint action. Logits start
  // at zero plus optional N(0, noise_scale^2) noise; each entry's noise is
  // drawn from a stream keyed by (seed, agent, key) so registration order does
  // not matter.
  void RegisterAll(const DecPomdp& env, double noise_scale = 0.0,
                   std::uint64_t seed = 0);

  const PolicyProvenance& provenance() const { return provenance_; }
  PolicyProvenance& mutable_provenance() { return provenance_; }

  // Joint policy whose agent i is agent i of seats[i].
  static TabularJointPolicy Compose(
      std::span<const TabularJointPolicy* const> seats);

 private:
  ParameterTable logits_;
  bool lazy_ = true;
  PolicyProvenance provenance_;
};

// Replaces every local distribution by the uniform distribution over its
// most probable actions. Exact ties only.
TabularJointPolicy Greedify(const TabularJointPolicy& policy);
// As Greedify, treating actions within relative `epsilon` of the maximum
// probability as tied. epsilon = 0 is exactly Greedify.
TabularJointPolicy TieToleranceGreedify(const TabularJointPolicy& policy,
                                        double epsilon);

double PolicyEntropy(const TabularJointPolicy& policy, int agent,
                     const std::string& key, int num_actions);

// Both agents share softmax(theta1, -theta1, theta2) over three actions.
struct SharedSymmetricPolicy {
  double theta1 = 0.0;
  double theta2 = 0.0;

  std::vector<double> Logits() const { return {theta1, -theta1, theta2}; }
  std::vector<double> Probs() const;
  // Expands to a tabular policy for a one-step, three-action, two-agent game.
  TabularJointPolicy ToJointPolicy(const DecPomdp& env) const;
  // Chain rule from a logit-table gradient to (d/dtheta1, d/dtheta2), summed
  // over both agents.
  std::pair<double, double> ProjectGradient(const DecPomdp& env,
                                            const ParameterTable& grad) const;
};

// Policy file (JSON). Logits are stored as hex-float strings so a round trip
// is bit-exact and -inf survives.
nlohmann::json PolicyToJson(const TabularJointPolicy& policy,
                            const std::string& tool_version);
TabularJointPolicy PolicyFromJson(const nlohmann::json& doc);
void SavePolicy(const TabularJointPolicy& policy, const std::string& path,
                const std::string& tool_version);
TabularJointPolicy LoadPolicy(const std::string& path);

}  // namespace xplab

#endif  // XPLAB_POLICY_H_
