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

#ifndef XPLAB_DEC_POMDP_H_
#define XPLAB_DEC_POMDP_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xplab {

class XplabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A policy was asked for an action-observation history it does not know and
// cannot lazily initialize.
class MissingAohError : public XplabError {
 public:
  MissingAohError(int agent, const std::string& key);
  int agent() const { return agent_; }
  const std::string& key() const { return key_; }

 private:
  int agent_;
  std::string key_;
};

class BudgetExceededError : public XplabError {
 public:
  using XplabError::XplabError;
};

class ConfigError : public XplabError {
 public:
  using XplabError::XplabError;
};

using JointAction = std::vector<int>;

// Local action-observation history of one agent. Holds o_0..o_t and
// a_0..a_{t-1}; the initial observation is part of the history so that an
// agent can condition on the initial state at t = 0.
struct Aoh {
  std::vector<int> observations;
  std::vector<int> actions;

  int Length() const { return static_cast<int>(actions.size()); }
};

struct Transition {
  int next_state;
  double probability;
};

// Finite-horizon Dec-POMDP with deterministic local observations.
//
// States are indexed integers with labels. Chance lives in the initial
// distribution and the transition function. Environments are built in code
// (see envs.h) and shared as std::shared_ptr<const DecPomdp>.
struct DecPomdp {
  std::string name;
  int num_agents = 0;
  int horizon = 0;
  double discount = 1.0;

  std::vector<std::string> state_labels;
  std::vector<bool> terminal;
  std::vector<double> initial_distribution;

  // [agent][symbol] labels. Labels appear verbatim in AOH keys, so they must
  // not contain '|'.
  std::vector<std::vector<std::string>> observation_labels;
  std::vector<std::vector<std::string>> action_labels;

  // Legal local actions at a local history, as indices into action_labels.
  // Must never be empty; agents that do not act get a single no-op.
  std::function<std::vector<int>(int agent, const Aoh& aoh)> legal_actions;
  std::function<int(int agent, int state)> observe;
  std::function<std::vector<Transition>(int state, const JointAction& joint)>
      transition;
  std::function<double(int state, const JointAction& joint)> reward;

  int NumStates() const { return static_cast<int>(state_labels.size()); }

  // Canonical key "o0|a0|o1|...|ot" built from labels.
  std::string AohKey(int agent, const Aoh& aoh) const;
  // Key of the history extended by (action, next observation).
  std::string ExtendKey(int agent, const std::string& key, int action,
                        int observation) const;
};

using EnvPtr = std::shared_ptr<const DecPomdp>;

// Checks the structural invariants by walking every state reachable under
// some legal joint action: probability vectors sum to 1 within 1e-12, legal
// action sets are non-empty and well formed, and every state reached at the
// horizon is terminal. Throws XplabError on the first violation.
void ValidateDecPomdp(const DecPomdp& env);

struct Step {
  int state = 0;
  JointAction joint_action;
  // Per agent: position of the chosen action within legal_actions, i.e. the
  // logit index the policy used.
  std::vector<int> choice;
  // Per agent: number of legal actions at this step.
  std::vector<int> num_legal;
  // Per agent: canonical AOH key at this step.
  std::vector<std::string> aoh_keys;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<Step> steps;
  int final_state = -1;

  int Length() const { return static_cast<int>(steps.size()); }
  // Local history of `agent` at step t (0 <= t <= Length()), rebuilt from the
  // state-action history.
  Aoh LocalAoh(const DecPomdp& env, int agent, int t) const;
  double Return(double discount) const;
  // G_t = sum_{t' >= t} discount^{t'-t} r_{t'}, computed by the backward
  // recursion G_t = r_t + discount * G_{t+1}.
  std::vector<double> ReturnsToGo(double discount) const;
  // Stable text form used for equality checks and frequency counting.
  std::string Signature() const;
};

class TabularJointPolicy;

enum class RolloutMode { kSampled, kGreedy };

// Samples one episode under the product policy. In greedy mode every agent
// draws uniformly among its own (tolerance-tied) most probable actions.
Trajectory Rollout(const DecPomdp& env, const TabularJointPolicy& policy,
                   std::mt19937_64& rng, RolloutMode mode = RolloutMode::kSampled);
Trajectory Rollout(const DecPomdp& env, const TabularJointPolicy& policy,
                   std::uint64_t seed, RolloutMode mode = RolloutMode::kSampled);

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability;
};

inline constexpr std::size_t kDefaultNodeBudget = 1000000;

// Every positive-probability trajectory with its exact probability.
// Throws BudgetExceededError when more than `node_budget` tree nodes would be
// expanded.
std::vector<WeightedTrajectory> EnumerateTrajectories(
    const DecPomdp& env, const TabularJointPolicy& policy,
    std::size_t node_budget = kDefaultNodeBudget);

// Derives an independent 64-bit stream seed from a master seed and indices
// (splitmix64 mixing).
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0);

// Uniform double in [0, 1) from the top 53 bits of the generator.
double UniformUnit(std::mt19937_64& rng);
// Index drawn from a probability vector (entries need not be normalized).
int SampleIndex(const std::vector<double>& probs, std::mt19937_64& rng);

}  // namespace xplab

#endif  // XPLAB_DEC_POMDP_H_
