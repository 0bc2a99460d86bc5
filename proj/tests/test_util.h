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


// Policy builders and closed-form oracles shared by the unit tests. The
// oracles below never call into the trajectory enumerator.

#ifndef XPLAB_TESTS_TEST_UTIL_H_
#define XPLAB_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "xplab/dec_pomdp.h"
#include "xplab/envs.h"
#include "xplab/policy.h"

namespace xplab::testing {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline std::vector<double> OneHot(int n, int a) {
  std::vector<double> v(n, kNegInf);
  v.at(a) = 0.0;
  return v;
}

inline std::vector<double> LogOf(const std::vector<double>& probs) {
  std::vector<double> v;
  for (double p : probs) v.push_back(std::log(p));
  return v;
}

// Two-agent matrix game policy from per-agent logits.
inline TabularJointPolicy MatrixPolicy(const std::vector<double>& row,
                                       const std::vector<double>& col) {
  TabularJointPolicy p(2);
  const int m = static_cast<int>(row.size());
  p.MutableLogits(0, "none", m) = row;
  p.MutableLogits(1, "none", m) = col;
  return p;
}

// Both agents play action `a` (0-based) with certainty.
inline TabularJointPolicy PureMatrixPolicy(int m, int a0, int a1) {
  return MatrixPolicy(OneHot(m, a0), OneHot(m, a1));
}

// Deterministic cat/dog strategy: Alice's action per pet and Bob's guess per
// observation.
struct CatDogStrategy {
  int alice_cat = catdog::kReveal;
  int alice_dog = catdog::kReveal;
  int bob_on = catdog::kGuessCat;
  int bob_off = catdog::kGuessDog;
  int bob_cat = catdog::kGuessCat;
  int bob_dog = catdog::kGuessDog;
};

inline TabularJointPolicy CatDogPolicy(const CatDogStrategy& s) {
  TabularJointPolicy p(2);
  p.MutableLogits(catdog::kAlice, "cat", 4) = OneHot(4, s.alice_cat);
  p.MutableLogits(catdog::kAlice, "dog", 4) = OneHot(4, s.alice_dog);
  p.MutableLogits(catdog::kBob, "none|noop|on", 3) = OneHot(3, s.bob_on);
  p.MutableLogits(catdog::kBob, "none|noop|off", 3) = OneHot(3, s.bob_off);
  p.MutableLogits(catdog::kBob, "none|noop|cat", 3) = OneHot(3, s.bob_cat);
  p.MutableLogits(catdog::kBob, "none|noop|dog", 3) = OneHot(3, s.bob_dog);
  return p;
}

// Convention 0: cat -> on, dog -> off. Convention 1 swaps the signals.
inline TabularJointPolicy CatDogConvention(int convention) {
  CatDogStrategy s;
  s.alice_cat = convention == 0 ? catdog::kOn : catdog::kOff;
  s.alice_dog = convention == 0 ? catdog::kOff : catdog::kOn;
  s.bob_on = convention == 0 ? catdog::kGuessCat : catdog::kGuessDog;
  s.bob_off = convention == 0 ? catdog::kGuessDog : catdog::kGuessCat;
  return CatDogPolicy(s);
}

inline TabularJointPolicy RandomPolicy(const DecPomdp& env, std::uint64_t seed,
                                       double scale = 1.0) {
  TabularJointPolicy p(env.num_agents);
  p.RegisterAll(env, scale, seed);
  return p;
}

// p^T M q.
inline double BilinearOracle(const PayoffMatrix& m, const std::vector<double>& p,
                             const std::vector<double>& q) {
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) v += p[i] * m[i][j] * q[j];
  }
  return v;
}

inline std::vector<double> OracleSoftmax(const std::vector<double>& logits) {
  double mx = kNegInf;
  for (double l : logits) mx = std::max(mx, l);
  std::vector<double> p;
  double z = 0.0;
  for (double l : logits) {
    p.push_back(l == kNegInf ? 0.0 : std::exp(l - mx));
    z += p.back();
  }
  for (double& v : p) v /= z;
  return p;
}

// Expected cat/dog return written out by hand from the game rules, for any
// policy that has entries for Alice's two decisions and Bob's four.
inline double CatDogReturnOracle(const CatDogSpec& spec,
                                 const TabularJointPolicy& policy) {
  using namespace catdog;
  const auto& alice = policy.logits().agent(kAlice);
  const auto& bob = policy.logits().agent(kBob);
  const char* pets[] = {"cat", "dog"};
  double total = 0.0;
  for (int pet = 0; pet < 2; ++pet) {
    const auto pa = OracleSoftmax(alice.at(pets[pet]));
    const std::string bob_keys[] = {"none|noop|on", "none|noop|off",
                                    std::string("none|noop|") + pets[pet]};
    for (int a = 0; a < 4; ++a) {
      if (pa[a] == 0.0) continue;
      if (a == kAliceBail) {
        total += 0.5 * pa[a] * spec.bail_reward;
        continue;
      }
      double value = a == kReveal ? spec.reveal_reward : 0.0;
      const auto pb = OracleSoftmax(bob.at(bob_keys[a]));
      value += pb[kBobBail] * spec.bail_reward;
      value += pb[pet] * spec.guess_reward_magnitude;
      value -= pb[1 - pet] * spec.guess_reward_magnitude;
      total += 0.5 * pa[a] * value;
    }
  }
  return total;
}

// One-round game for n agents with m actions each. The reward weights seats
// differently so that seat permutations are distinguishable:
//   r(a) = sum_i (i + 1) * a_i, plus 10 if every agent picks action 0.
inline EnvPtr MakeSeatWeightedGame(int n, int m) {
  auto env = std::make_shared<DecPomdp>();
  env->name = "seat_weighted";
  env->num_agents = n;
  env->horizon = 1;
  env->state_labels = {"start", "end"};
  env->terminal = {false, true};
  env->initial_distribution = {1.0, 0.0};
  std::vector<std::string> actions;
  for (int a = 0; a < m; ++a) actions.push_back(std::to_string(a));
  env->observation_labels.assign(n, {"none"});
  env->action_labels.assign(n, actions);
  env->legal_actions = [m](int, const Aoh&) {
    std::vector<int> all(m);
    for (int a = 0; a < m; ++a) all[a] = a;
    return all;
  };
  env->observe = [](int, int) { return 0; };
  env->transition = [](int, const JointAction&) {
    return std::vector<Transition>{{1, 1.0}};
  };
  env->reward = [](int state, const JointAction& joint) {
    if (state != 0) return 0.0;
    double r = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < joint.size(); ++i) {
      r += (i + 1.0) * joint[i];
      all_zero = all_zero && joint[i] == 0;
    }
    return r + (all_zero ? 10.0 : 0.0);
  };
  return env;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("xplab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace xplab::testing

#endif  // XPLAB_TESTS_TEST_UTIL_H_
