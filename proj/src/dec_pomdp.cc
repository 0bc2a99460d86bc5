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

#include "xplab/dec_pomdp.h"

#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "xplab/policy.h"

namespace xplab {

MissingAohError::MissingAohError(int agent, const std::string& key)
    : XplabError(fmt::format(
          "policy has no entry for agent {} at history '{}'; register the "
          "environment's histories or use a lazy policy",
          agent, key)),
      agent_(agent),
      key_(key) {}

std::string DecPomdp::AohKey(int agent, const Aoh& aoh) const {
  const auto& obs = observation_labels.at(agent);
  const auto& act = action_labels.at(agent);
  if (aoh.observations.size() != aoh.actions.size() + 1) {
    throw XplabError("malformed AOH: need one more observation than actions");
  }
  std::string key = obs.at(aoh.observations[0]);
  for (std::size_t t = 0; t < aoh.actions.size(); ++t) {
    key += '|';
    key += act.at(aoh.actions[t]);
    key += '|';
    key += obs.at(aoh.observations[t + 1]);
  }
  return key;
}

std::string DecPomdp::ExtendKey(int agent, const std::string& key, int action,
                                int observation) const {
  std::string out = key;
  out += '|';
  out += action_labels[agent][action];
  out += '|';
  out += observation_labels[agent][observation];
  return out;
}

namespace {

void CheckDistribution(const std::vector<Transition>& dist, int num_states,
                       const std::string& where) {
  double total = 0.0;
  for (const auto& tr : dist) {
    if (tr.next_state < 0 || tr.next_state >= num_states) {
      throw XplabError(fmt::format("{}: next state {} out of range", where,
                                   tr.next_state));
    }
    if (!(tr.probability >= 0.0)) {
      throw XplabError(fmt::format("{}: negative probability", where));
    }
    total += tr.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw XplabError(
        fmt::format("{}: probabilities sum to {:.17g}, not 1", where, total));
  }
}

struct Node {
  int state;
  int t;
  std::vector<Aoh> aohs;
};

void Visit(const DecPomdp& env, const Node& node, std::set<std::string>& seen) {
  const bool terminal = env.terminal.at(node.state);
  if (node.t == env.horizon && !terminal) {
    throw XplabError(fmt::format("state '{}' reached at the horizon is not terminal",
                                 env.state_labels[node.state]));
  }
  if (terminal) return;
  std::string memo = std::to_string(node.t) + "#" + std::to_string(node.state);
  std::vector<std::vector<int>> legal(env.num_agents);
  for (int i = 0; i < env.num_agents; ++i) {
    legal[i] = env.legal_actions(i, node.aohs[i]);
    if (legal[i].empty()) {
      throw XplabError(fmt::format("agent {} has no legal action at '{}'", i,
                                   env.AohKey(i, node.aohs[i])));
    }
    std::set<int> unique(legal[i].begin(), legal[i].end());
    if (unique.size() != legal[i].size()) {
      throw XplabError(fmt::format("agent {} has duplicate legal actions", i));
    }
    for (int a : legal[i]) {
      if (a < 0 || a >= static_cast<int>(env.action_labels[i].size())) {
        throw XplabError(fmt::format("agent {} legal action {} out of range", i, a));
      }
    }
    memo += "#" + env.AohKey(i, node.aohs[i]);
  }
  if (!seen.insert(memo).second) return;

  JointAction joint(env.num_agents, 0);
  std::vector<int> idx(env.num_agents, 0);
  while (true) {
    for (int i = 0; i < env.num_agents; ++i) joint[i] = legal[i][idx[i]];
    const auto next = env.transition(node.state, joint);
    CheckDistribution(next, env.NumStates(),
                      fmt::format("transition from '{}'",
                                  env.state_labels[node.state]));
    const double r = env.reward(node.state, joint);
    if (!std::isfinite(r)) throw XplabError("non-finite reward");
    for (const auto& tr : next) {
      if (tr.probability <= 0.0) continue;
      Node child{tr.next_state, node.t + 1, node.aohs};
      for (int i = 0; i < env.num_agents; ++i) {
        child.aohs[i].actions.push_back(joint[i]);
        child.aohs[i].observations.push_back(env.observe(i, tr.next_state));
      }
      Visit(env, child, seen);
    }
    int k = 0;
    while (k < env.num_agents && ++idx[k] == static_cast<int>(legal[k].size())) {
      idx[k] = 0;
      ++k;
    }
    if (k == env.num_agents) break;
  }
}

}  // namespace

void ValidateDecPomdp(const DecPomdp& env) {
  if (env.num_agents < 1) throw XplabError("need at least one agent");
  if (env.horizon < 1) throw XplabError("horizon must be positive");
  if (!(env.discount >= 0.0 && env.discount <= 1.0)) {
    throw XplabError("discount must lie in [0, 1]");
  }
  const int n = env.NumStates();
  if (static_cast<int>(env.terminal.size()) != n ||
      static_cast<int>(env.initial_distribution.size()) != n) {
    throw XplabError("state tables disagree in size");
  }
  if (static_cast<int>(env.observation_labels.size()) != env.num_agents ||
      static_cast<int>(env.action_labels.size()) != env.num_agents) {
    throw XplabError("label tables must have one entry per agent");
  }
  for (int i = 0; i < env.num_agents; ++i) {
    for (const auto* labels : {&env.observation_labels[i], &env.action_labels[i]}) {
      for (const auto& l : *labels) {
        if (l.find('|') != std::string::npos) {
          throw XplabError(fmt::format("label '{}' contains '|'", l));
        }
      }
    }
  }
  std::vector<Transition> init;
  for (int s = 0; s < n; ++s) {
    if (env.initial_distribution[s] != 0.0) {
      init.push_back({s, env.initial_distribution[s]});
    }
  }
  CheckDistribution(init, n, "initial distribution");
  std::set<std::string> seen;
  for (const auto& tr : init) {
    Node root{tr.next_state, 0, std::vector<Aoh>(env.num_agents)};
    for (int i = 0; i < env.num_agents; ++i) {
      root.aohs[i].observations.push_back(env.observe(i, tr.next_state));
    }
    Visit(env, root, seen);
  }
}

Aoh Trajectory::LocalAoh(const DecPomdp& env, int agent, int t) const {
  if (t < 0 || t > Length()) throw XplabError("step index out of range");
  Aoh aoh;
  for (int k = 0; k <= t; ++k) {
    const int state = k < Length() ? steps[k].state : final_state;
    aoh.observations.push_back(env.observe(agent, state));
    if (k < t) aoh.actions.push_back(steps[k].joint_action.at(agent));
  }
  return aoh;
}

double Trajectory::Return(double discount) const {
  double g = 0.0;
  double w = 1.0;
  for (const auto& s : steps) {
    g += w * s.reward;
    w *= discount;
  }
  return g;
}

std::vector<double> Trajectory::ReturnsToGo(double discount) const {
  std::vector<double> g(steps.size());
  double acc = 0.0;
  for (int t = Length() - 1; t >= 0; --t) {
    acc = steps[t].reward + discount * acc;
    g[t] = acc;
  }
  return g;
}

std::string Trajectory::Signature() const {
  std::string out;
  for (const auto& s : steps) {
    out += std::to_string(s.state);
    out += ':';
    for (std::size_t i = 0; i < s.joint_action.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(s.joint_action[i]);
    }
    out += ';';
  }
  out += std::to_string(final_state);
  return out;
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ a);
  h = mix(h ^ (b + 0x632be59bd9b4e019ULL));
  h = mix(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int SampleIndex(const std::vector<double>& probs, std::mt19937_64& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = UniformUnit(rng) * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  if (last_positive < 0) throw XplabError("cannot sample from an all-zero distribution");
  return last_positive;
}

namespace {

struct LiveAgent {
  std::string key;
  Aoh aoh;
};

int SampleInitial(const DecPomdp& env, std::mt19937_64& rng) {
  return SampleIndex(env.initial_distribution, rng);
}

}  // namespace

Trajectory Rollout(const DecPomdp& env, const TabularJointPolicy& policy,
                   std::mt19937_64& rng, RolloutMode mode) {
  if (policy.num_agents() != env.num_agents) {
    throw XplabError(fmt::format("policy covers {} agents, environment has {}",
                                 policy.num_agents(), env.num_agents));
  }
  Trajectory traj;
  int state = SampleInitial(env, rng);
  std::vector<LiveAgent> agents(env.num_agents);
  for (int i = 0; i < env.num_agents; ++i) {
    agents[i].aoh.observations.push_back(env.observe(i, state));
    agents[i].key = env.observation_labels[i][agents[i].aoh.observations[0]];
  }
  for (int t = 0; t < env.horizon && !env.terminal[state]; ++t) {
    Step step;
    step.state = state;
    step.joint_action.resize(env.num_agents);
    step.choice.resize(env.num_agents);
    step.num_legal.resize(env.num_agents);
    step.aoh_keys.resize(env.num_agents);
    for (int i = 0; i < env.num_agents; ++i) {
      const auto legal = env.legal_actions(i, agents[i].aoh);
      const int n = static_cast<int>(legal.size());
      std::vector<double> probs = policy.ActionProbs(i, agents[i].key, n);
      if (mode == RolloutMode::kGreedy) probs = GreedyProbs(probs, kDefaultTieEpsilon);
      const int c = n == 1 ? 0 : SampleIndex(probs, rng);
      step.choice[i] = c;
      step.num_legal[i] = n;
      step.joint_action[i] = legal[c];
      step.aoh_keys[i] = agents[i].key;
    }
    step.reward = env.reward(state, step.joint_action);
    const auto next = env.transition(state, step.joint_action);
    std::vector<double> p;
    p.reserve(next.size());
    for (const auto& tr : next) p.push_back(tr.probability);
    const int next_state = next[next.size() == 1 ? 0 : SampleIndex(p, rng)].next_state;
    for (int i = 0; i < env.num_agents; ++i) {
      const int o = env.observe(i, next_state);
      agents[i].key = env.ExtendKey(i, agents[i].key, step.joint_action[i], o);
      agents[i].aoh.actions.push_back(step.joint_action[i]);
      agents[i].aoh.observations.push_back(o);
    }
    traj.steps.push_back(std::move(step));
    state = next_state;
  }
  traj.final_state = state;
  return traj;
}

Trajectory Rollout(const DecPomdp& env, const TabularJointPolicy& policy,
                   std::uint64_t seed, RolloutMode mode) {
  std::mt19937_64 rng(seed);
  return Rollout(env, policy, rng, mode);
}

namespace {

class Enumerator {
 public:
  Enumerator(const DecPomdp& env, const TabularJointPolicy& policy,
             std::size_t budget)
      : env_(env), policy_(policy), budget_(budget) {}

  std::vector<WeightedTrajectory> Run() {
    for (int s = 0; s < env_.NumStates(); ++s) {
      const double p0 = env_.initial_distribution[s];
      if (p0 <= 0.0) continue;
      std::vector<LiveAgent> agents(env_.num_agents);
      for (int i = 0; i < env_.num_agents; ++i) {
        agents[i].aoh.observations.push_back(env_.observe(i, s));
        agents[i].key = env_.observation_labels[i][agents[i].aoh.observations[0]];
      }
      Trajectory prefix;
      Expand(s, 0, p0, agents, prefix);
    }
    return std::move(out_);
  }

 private:
  void Charge() {
    if (++nodes_ > budget_) {
      throw BudgetExceededError(fmt::format(
          "trajectory enumeration exceeded the node budget of {}; use Monte "
          "Carlo evaluation for this environment",
          budget_));
    }
  }

  void Expand(int state, int t, double prob, const std::vector<LiveAgent>& agents,
              Trajectory& prefix) {
    Charge();
    if (env_.terminal[state] || t == env_.horizon) {
      Trajectory done = prefix;
      done.final_state = state;
      out_.push_back({std::move(done), prob});
      return;
    }
    const int n = env_.num_agents;
    std::vector<std::vector<int>> legal(n);
    std::vector<std::vector<double>> probs(n);
    for (int i = 0; i < n; ++i) {
      legal[i] = env_.legal_actions(i, agents[i].aoh);
      probs[i] = policy_.ActionProbs(i, agents[i].key,
                                     static_cast<int>(legal[i].size()));
    }
    std::vector<int> idx(n, 0);
    while (true) {
      double pj = prob;
      for (int i = 0; i < n; ++i) pj *= probs[i][idx[i]];
      if (pj > 0.0) {
        Step step;
        step.state = state;
        step.joint_action.resize(n);
        step.choice = idx;
        step.num_legal.resize(n);
        step.aoh_keys.resize(n);
        for (int i = 0; i < n; ++i) {
          step.joint_action[i] = legal[i][idx[i]];
          step.num_legal[i] = static_cast<int>(legal[i].size());
          step.aoh_keys[i] = agents[i].key;
        }
        step.reward = env_.reward(state, step.joint_action);
        const auto next = env_.transition(state, step.joint_action);
        prefix.steps.push_back(step);
        for (const auto& tr : next) {
          if (tr.probability <= 0.0) continue;
          std::vector<LiveAgent> child = agents;
          for (int i = 0; i < n; ++i) {
            const int o = env_.observe(i, tr.next_state);
            child[i].key = env_.ExtendKey(i, child[i].key, step.joint_action[i], o);
            child[i].aoh.actions.push_back(step.joint_action[i]);
            child[i].aoh.observations.push_back(o);
          }
          Expand(tr.next_state, t + 1, pj * tr.probability, child, prefix);
        }
        prefix.steps.pop_back();
      }
      int k = 0;
      while (k < n && ++idx[k] == static_cast<int>(legal[k].size())) {
        idx[k] = 0;
        ++k;
      }
      if (k == n) break;
    }
  }

  const DecPomdp& env_;
  const TabularJointPolicy& policy_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<WeightedTrajectory> out_;
};

}  // namespace

std::vector<WeightedTrajectory> EnumerateTrajectories(
    const DecPomdp& env, const TabularJointPolicy& policy,
    std::size_t node_budget) {
  if (policy.num_agents() != env.num_agents) {
    throw XplabError(fmt::format("policy covers {} agents, environment has {}",
                                 policy.num_agents(), env.num_agents));
  }
  return Enumerator(env, policy, node_budget).Run();
}

}  // namespace xplab
