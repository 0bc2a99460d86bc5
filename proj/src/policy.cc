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

#include "xplab/policy.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>

#include "xplab/util.h"

namespace xplab {

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(m)) throw XplabError("softmax needs a finite maximum logit");
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(m)) throw XplabError("softmax needs a finite maximum logit");
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double log_z = m + std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

double Entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<double> GreedyProbs(std::span<const double> probs, double epsilon) {
  std::vector<double> out(probs.size(), 0.0);
  if (probs.empty()) return out;
  const double m = *std::max_element(probs.begin(), probs.end());
  const double cut = m * (1.0 - epsilon);
  int k = 0;
  for (double p : probs) k += p >= cut;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] >= cut) out[i] = 1.0 / k;
  }
  return out;
}

const std::vector<double>* ParameterTable::Find(int agent,
                                                const std::string& key) const {
  const auto& t = tables_.at(agent);
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

std::vector<double>& ParameterTable::At(int agent, const std::string& key,
                                        int size) {
  auto& t = tables_.at(agent);
  auto it = t.find(key);
  if (it == t.end()) {
    it = t.emplace(key, std::vector<double>(size, 0.0)).first;
  } else if (static_cast<int>(it->second.size()) != size) {
    throw XplabError(fmt::format(
        "agent {} history '{}' has {} entries, expected {}", agent, key,
        it->second.size(), size));
  }
  return it->second;
}

void ParameterTable::AddScaled(const ParameterTable& other, double scale) {
  if (other.num_agents() != num_agents()) {
    throw XplabError("parameter tables cover different agent counts");
  }
  for (int i = 0; i < num_agents(); ++i) {
    for (const auto& [key, v] : other.tables_[i]) {
      auto& dst = At(i, key, static_cast<int>(v.size()));
      for (std::size_t a = 0; a < v.size(); ++a) dst[a] += scale * v[a];
    }
  }
}

void ParameterTable::Scale(double factor) {
  for (auto& t : tables_) {
    for (auto& [key, v] : t) {
      for (double& x : v) x *= factor;
    }
  }
}

double ParameterTable::Norm() const {
  double s = 0.0;
  for (const auto& t : tables_) {
    for (const auto& [key, v] : t) {
      for (double x : v) s += x * x;
    }
  }
  return std::sqrt(s);
}

bool ParameterTable::AllFinite() const {
  for (const auto& t : tables_) {
    for (const auto& [key, v] : t) {
      for (double x : v) {
        if (!std::isfinite(x)) return false;
      }
    }
  }
  return true;
}

std::size_t ParameterTable::NumEntries() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.size();
  return n;
}

ParameterTable ParameterTable::ZerosLike() const {
  ParameterTable out(num_agents());
  for (int i = 0; i < num_agents(); ++i) {
    for (const auto& [key, v] : tables_[i]) {
      out.tables_[i].emplace(key, std::vector<double>(v.size(), 0.0));
    }
  }
  return out;
}

std::vector<double> TabularJointPolicy::ActionProbs(int agent,
                                                    const std::string& key,
                                                    int num_actions) const {
  if (const auto* logits = logits_.Find(agent, key)) {
    if (static_cast<int>(logits->size()) != num_actions) {
      throw XplabError(fmt::format(
          "agent {} history '{}' has {} logits but {} legal actions", agent,
          key, logits->size(), num_actions));
    }
    return Softmax(*logits);
  }
  if (!lazy_) throw MissingAohError(agent, key);
  return std::vector<double>(num_actions, 1.0 / num_actions);
}

std::vector<double> TabularJointPolicy::ActionLogProbs(int agent,
                                                       const std::string& key,
                                                       int num_actions) const {
  if (const auto* logits = logits_.Find(agent, key)) {
    if (static_cast<int>(logits->size()) != num_actions) {
      throw XplabError(fmt::format(
          "agent {} history '{}' has {} logits but {} legal actions", agent,
          key, logits->size(), num_actions));
    }
    return LogSoftmax(*logits);
  }
  if (!lazy_) throw MissingAohError(agent, key);
  return std::vector<double>(num_actions, -std::log(static_cast<double>(num_actions)));
}

namespace {

void RegisterFrom(const DecPomdp& env, int state, int t,
                  std::vector<Aoh> aohs, std::vector<std::string> keys,
                  std::set<std::string>& seen, TabularJointPolicy& policy,
                  double noise_scale, std::uint64_t seed) {
  if (env.terminal[state] || t == env.horizon) return;
  const int n = env.num_agents;
  std::string memo = std::to_string(t) + "#" + std::to_string(state);
  std::vector<std::vector<int>> legal(n);
  for (int i = 0; i < n; ++i) {
    legal[i] = env.legal_actions(i, aohs[i]);
    memo += "#" + keys[i];
    const int size = static_cast<int>(legal[i].size());
    if (!policy.logits().Find(i, keys[i])) {
      auto& v = policy.MutableLogits(i, keys[i], size);
      if (noise_scale > 0.0 && size > 1) {
        std::mt19937_64 rng(DeriveSeed(seed, static_cast<std::uint64_t>(i),
                                       Fnv1a64(keys[i])));
        std::normal_distribution<double> gauss(0.0, noise_scale);
        for (double& x : v) x = gauss(rng);
      }
    }
  }
  if (!seen.insert(memo).second) return;
  std::vector<int> idx(n, 0);
  JointAction joint(n);
  while (true) {
    for (int i = 0; i < n; ++i) joint[i] = legal[i][idx[i]];
    for (const auto& tr : env.transition(state, joint)) {
      if (tr.probability <= 0.0) continue;
      auto child_aohs = aohs;
      auto child_keys = keys;
      for (int i = 0; i < n; ++i) {
        const int o = env.observe(i, tr.next_state);
        child_aohs[i].actions.push_back(joint[i]);
        child_aohs[i].observations.push_back(o);
        child_keys[i] = env.ExtendKey(i, keys[i], joint[i], o);
      }
      RegisterFrom(env, tr.next_state, t + 1, std::move(child_aohs),
                   std::move(child_keys), seen, policy, noise_scale, seed);
    }
    int k = 0;
    while (k < n && ++idx[k] == static_cast<int>(legal[k].size())) {
      idx[k] = 0;
      ++k;
    }
    if (k == n) break;
  }
}

}  // namespace

void TabularJointPolicy::RegisterAll(const DecPomdp& env, double noise_scale,
                                     std::uint64_t seed) {
  if (num_agents() != env.num_agents) {
    throw XplabError("policy and environment disagree on the agent count");
  }
  std::set<std::string> seen;
  for (int s = 0; s < env.NumStates(); ++s) {
    if (env.initial_distribution[s] <= 0.0) continue;
    std::vector<Aoh> aohs(env.num_agents);
    std::vector<std::string> keys(env.num_agents);
    for (int i = 0; i < env.num_agents; ++i) {
      aohs[i].observations.push_back(env.observe(i, s));
      keys[i] = env.AohKey(i, aohs[i]);
    }
    RegisterFrom(env, s, 0, std::move(aohs), std::move(keys), seen, *this,
                 noise_scale, seed);
  }
}

TabularJointPolicy TabularJointPolicy::Compose(
    std::span<const TabularJointPolicy* const> seats) {
  const int n = static_cast<int>(seats.size());
  TabularJointPolicy out(n, true);
  bool lazy = true;
  for (int i = 0; i < n; ++i) {
    if (seats[i]->num_agents() != n) {
      throw XplabError(fmt::format(
          "seat {} policy covers {} agents, team has {}", i,
          seats[i]->num_agents(), n));
    }
    out.logits_.mutable_agent(i) = seats[i]->logits().agent(i);
    lazy = lazy && seats[i]->lazy();
  }
  out.lazy_ = lazy;
  return out;
}

TabularJointPolicy TieToleranceGreedify(const TabularJointPolicy& policy,
                                        double epsilon) {
  if (!(epsilon >= 0.0)) throw XplabError("tie epsilon must be non-negative");
  TabularJointPolicy out = policy;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < out.num_agents(); ++i) {
    for (auto& [key, logits] : out.mutable_logits().mutable_agent(i)) {
      const auto greedy = GreedyProbs(Softmax(logits), epsilon);
      for (std::size_t a = 0; a < logits.size(); ++a) {
        logits[a] = greedy[a] > 0.0 ? 0.0 : kNegInf;
      }
    }
  }
  return out;
}

TabularJointPolicy Greedify(const TabularJointPolicy& policy) {
  return TieToleranceGreedify(policy, 0.0);
}

double PolicyEntropy(const TabularJointPolicy& policy, int agent,
                     const std::string& key, int num_actions) {
  return Entropy(policy.ActionProbs(agent, key, num_actions));
}

std::vector<double> SharedSymmetricPolicy::Probs() const {
  const auto l = Logits();
  return Softmax(l);
}

namespace {

std::string SingleDecisionKey(const DecPomdp& env, int agent) {
  if (env.num_agents != 2 || env.horizon != 1) {
    throw XplabError("shared symmetric parametrization needs a one-step two-agent game");
  }
  int start = -1;
  for (int s = 0; s < env.NumStates(); ++s) {
    if (env.initial_distribution[s] > 0.0) {
      if (start >= 0) throw XplabError("shared symmetric parametrization needs a single start state");
      start = s;
    }
  }
  Aoh aoh;
  aoh.observations.push_back(env.observe(agent, start));
  if (env.legal_actions(agent, aoh).size() != 3) {
    throw XplabError("shared symmetric parametrization needs three actions");
  }
  return env.AohKey(agent, aoh);
}

}  // namespace

TabularJointPolicy SharedSymmetricPolicy::ToJointPolicy(const DecPomdp& env) const {
  TabularJointPolicy out(2);
  for (int i = 0; i < 2; ++i) {
    out.MutableLogits(i, SingleDecisionKey(env, i), 3) = Logits();
  }
  return out;
}

std::pair<double, double> SharedSymmetricPolicy::ProjectGradient(
    const DecPomdp& env, const ParameterTable& grad) const {
  double d1 = 0.0;
  double d2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto* g = grad.Find(i, SingleDecisionKey(env, i));
    if (!g) continue;
    d1 += (*g)[0] - (*g)[1];
    d2 += (*g)[2];
  }
  return {d1, d2};
}

namespace {

std::string HexDouble(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) throw XplabError("cannot serialize NaN logit");
  return fmt::format("{:a}", x);
}

double ParseDouble(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw XplabError("logit must be a hex-float string or number");
  const std::string s = v.get<std::string>();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw XplabError(fmt::format("cannot parse logit '{}'", s));
  }
  return x;
}

}  // namespace

nlohmann::json PolicyToJson(const TabularJointPolicy& policy,
                            const std::string& tool_version) {
  using nlohmann::json;
  const auto& prov = policy.provenance();
  json doc;
  doc["format"] = "xplab-policy/1";
  doc["tool_version"] = tool_version;
  doc["num_agents"] = policy.num_agents();
  doc["env_name"] = prov.env_name;
  doc["env"] = prov.env_config;
  doc["alpha"] = prov.alpha;
  doc["seed"] = prov.seed;
  doc["config_digest"] = prov.config_digest;
  doc["label"] = prov.label;
  json agents = json::array();
  for (int i = 0; i < policy.num_agents(); ++i) {
    json entries = json::array();
    for (const auto& [key, logits] : policy.logits().agent(i)) {
      json arr = json::array();
      for (double x : logits) arr.push_back(HexDouble(x));
      entries.push_back({{"key", key}, {"logits", arr}});
    }
    agents.push_back({{"aohs", entries}});
  }
  doc["agents"] = agents;
  return doc;
}

TabularJointPolicy PolicyFromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "xplab-policy/1") {
      throw XplabError("unsupported policy format");
    }
    const int n = doc.at("num_agents").get<int>();
    const auto& agents = doc.at("agents");
    if (!agents.is_array() || static_cast<int>(agents.size()) != n) {
      throw XplabError("policy 'agents' must list num_agents entries");
    }
    TabularJointPolicy policy(n, false);
    for (int i = 0; i < n; ++i) {
      for (const auto& entry : agents[i].at("aohs")) {
        std::vector<double> logits;
        for (const auto& v : entry.at("logits")) logits.push_back(ParseDouble(v));
        policy.MutableLogits(i, entry.at("key").get<std::string>(),
                             static_cast<int>(logits.size())) = logits;
      }
    }
    auto& prov = policy.mutable_provenance();
    prov.env_name = doc.value("env_name", "");
    prov.env_config = doc.value("env", nlohmann::json());
    prov.alpha = doc.value("alpha", 0.0);
    prov.seed = doc.value("seed", std::uint64_t{0});
    prov.config_digest = doc.value("config_digest", "");
    prov.label = doc.value("label", "");
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw XplabError(fmt::format("malformed policy document: {}", e.what()));
  }
}

void SavePolicy(const TabularJointPolicy& policy, const std::string& path,
                const std::string& tool_version) {
  std::ofstream out(path);
  if (!out) throw XplabError(fmt::format("cannot write '{}'", path));
  out << PolicyToJson(policy, tool_version).dump(2) << "\n";
}

TabularJointPolicy LoadPolicy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw XplabError(fmt::format("cannot read '{}'", path));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw XplabError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return PolicyFromJson(doc);
}

}  // namespace xplab
