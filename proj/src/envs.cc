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

#include "xplab/envs.h"

#include <cmath>
#include <memory>
#include <set>
#include <string>

#include <fmt/format.h>

#include "xplab/util.h"

namespace xplab {

PayoffMatrix ConventionPayoff() {
  return {{2, -2, 1}, {-2, 2, 1}, {1, 1, 1}};
}

PayoffMatrix NonExploitingPayoff() {
  return {{3, 0, 0}, {0, 3, 0}, {0, 0, 2}};
}

EnvPtr MakeMatrixGame(const PayoffMatrix& payoff) {
  const int m = static_cast<int>(payoff.size());
  if (m == 0) throw ConfigError("payoff matrix is empty");
  std::string name = "matrix[";
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(payoff[i].size()) != m) {
      throw ConfigError(fmt::format(
          "payoff matrix must be square: row {} has {} entries, expected {}",
          i, payoff[i].size(), m));
    }
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(payoff[i][j])) {
        throw ConfigError(fmt::format("payoff[{}][{}] is not finite", i, j));
      }
      name += fmt::format("{}{:.17g}", j ? "," : "", payoff[i][j]);
    }
    name += i + 1 < m ? ";" : "]";
  }

  auto env = std::make_shared<DecPomdp>();
  env->name = name;
  env->num_agents = 2;
  env->horizon = 1;
  env->discount = 1.0;
  env->state_labels = {"start", "end"};
  env->terminal = {false, true};
  env->initial_distribution = {1.0, 0.0};
  std::vector<std::string> actions;
  for (int a = 0; a < m; ++a) actions.push_back(std::to_string(a + 1));
  env->observation_labels = {{"none"}, {"none"}};
  env->action_labels = {actions, actions};
  env->legal_actions = [m](int, const Aoh&) {
    std::vector<int> all(m);
    for (int a = 0; a < m; ++a) all[a] = a;
    return all;
  };
  env->observe = [](int, int) { return 0; };
  env->transition = [](int, const JointAction&) {
    return std::vector<Transition>{{1, 1.0}};
  };
  env->reward = [payoff](int state, const JointAction& joint) {
    return state == 0 ? payoff[joint[0]][joint[1]] : 0.0;
  };
  return env;
}

namespace {

// State layout: 0 cat, 1 dog (Alice to act); 2 + 3 * pet + {0 on, 1 off,
// 2 revealed} (Bob to act); 8 end.
constexpr int kEnd = 8;

int BobState(int pet, int signal) { return 2 + 3 * pet + signal; }

}  // namespace

EnvPtr MakeCatDog(const CatDogSpec& spec) {
  using namespace catdog;
  for (double v : {spec.reveal_reward, spec.bail_reward, spec.guess_reward_magnitude}) {
    if (!std::isfinite(v)) throw ConfigError("cat/dog rewards must be finite");
  }
  auto env = std::make_shared<DecPomdp>();
  env->name = fmt::format("cat_dog[reveal={:.17g},bail={:.17g},guess={:.17g}]",
                          spec.reveal_reward, spec.bail_reward,
                          spec.guess_reward_magnitude);
  env->num_agents = 2;
  env->horizon = 2;
  env->discount = 1.0;
  env->state_labels = {"cat",      "dog",     "cat:on",       "cat:off",
                       "cat:revealed", "dog:on", "dog:off", "dog:revealed",
                       "end"};
  env->terminal = {false, false, false, false, false, false, false, false, true};
  env->initial_distribution = {0.5, 0.5, 0, 0, 0, 0, 0, 0, 0};
  // Alice: cat, dog, wait, end. Bob: none, on, off, cat, dog, end.
  env->observation_labels = {{"cat", "dog", "wait", "end"},
                             {"none", "on", "off", "cat", "dog", "end"}};
  env->action_labels = {{"on", "off", "reveal", "bail", "noop"},
                        {"guess_cat", "guess_dog", "bail", "noop"}};
  env->legal_actions = [](int agent, const Aoh& aoh) -> std::vector<int> {
    const bool first = aoh.Length() == 0;
    if (agent == kAlice) {
      return first ? std::vector<int>{kOn, kOff, kReveal, kAliceBail}
                   : std::vector<int>{kAliceNoop};
    }
    return first ? std::vector<int>{kBobNoop}
                 : std::vector<int>{kGuessCat, kGuessDog, kBobBail};
  };
  env->observe = [](int agent, int state) {
    if (state == kEnd) return agent == kAlice ? 3 : 5;
    if (state < 2) return agent == kAlice ? state : 0;
    if (agent == kAlice) return 2;
    const int pet = (state - 2) / 3;
    const int signal = (state - 2) % 3;
    return signal == 2 ? 3 + pet : 1 + signal;
  };
  env->transition = [](int state, const JointAction& joint) {
    if (state < 2) {
      const int a = joint[kAlice];
      if (a == kAliceBail) return std::vector<Transition>{{kEnd, 1.0}};
      const int signal = a == kOn ? 0 : a == kOff ? 1 : 2;
      return std::vector<Transition>{{BobState(state, signal), 1.0}};
    }
    return std::vector<Transition>{{kEnd, 1.0}};
  };
  env->reward = [spec](int state, const JointAction& joint) {
    if (state < 2) {
      const int a = joint[kAlice];
      if (a == kReveal) return spec.reveal_reward;
      if (a == kAliceBail) return spec.bail_reward;
      return 0.0;
    }
    if (state == kEnd) return 0.0;
    const int pet = (state - 2) / 3;
    const int b = joint[kBob];
    if (b == kBobBail) return spec.bail_reward;
    return b == pet ? spec.guess_reward_magnitude : -spec.guess_reward_magnitude;
  };
  return env;
}

namespace {

void RejectUnknownKeys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(fmt::format("unknown key '{}.{}'", where, key));
    }
  }
}

double NumberAt(const nlohmann::json& obj, const std::string& key,
                const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError(fmt::format("'{}.{}' must be a number", where, key));
  }
  return obj[key].get<double>();
}

}  // namespace

EnvPtr MakeEnvFromJson(const nlohmann::json& config) {
  if (!config.is_object()) throw ConfigError("'env' must be an object");
  if (!config.contains("kind") || !config["kind"].is_string()) {
    throw ConfigError("'env.kind' must be \"matrix\" or \"cat_dog\"");
  }
  const std::string kind = config["kind"].get<std::string>();
  if (kind == "matrix") {
    RejectUnknownKeys(config, {"kind", "payoff"}, "env");
    if (!config.contains("payoff") || !config["payoff"].is_array()) {
      throw ConfigError("'env.payoff' must be an array of rows");
    }
    PayoffMatrix payoff;
    for (const auto& row : config["payoff"]) {
      if (!row.is_array()) throw ConfigError("'env.payoff' rows must be arrays");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) throw ConfigError("'env.payoff' entries must be numbers");
        r.push_back(v.get<double>());
      }
      payoff.push_back(r);
    }
    return MakeMatrixGame(payoff);
  }
  if (kind == "cat_dog") {
    RejectUnknownKeys(config, {"kind", "reveal_reward", "bail_reward", "guess_reward"},
                      "env");
    CatDogSpec spec;
    spec.reveal_reward = NumberAt(config, "reveal_reward", "env", spec.reveal_reward);
    spec.bail_reward = NumberAt(config, "bail_reward", "env", spec.bail_reward);
    spec.guess_reward_magnitude =
        NumberAt(config, "guess_reward", "env", spec.guess_reward_magnitude);
    return MakeCatDog(spec);
  }
  throw ConfigError(fmt::format("'env.kind' has unknown value '{}'", kind));
}

}  // namespace xplab
