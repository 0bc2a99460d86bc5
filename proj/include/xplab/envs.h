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

#ifndef XPLAB_ENVS_H_
#define XPLAB_ENVS_H_

#include <vector>

#include <nlohmann/json.hpp>
#include "xplab/dec_pomdp.h"

namespace xplab {

using PayoffMatrix = std::vector<std::vector<double>>;

// The two lever games used throughout. Action 3 of the first is the safe
// symmetric choice; the second rewards coordination on either of the first
// two actions more than on the third.
PayoffMatrix ConventionPayoff();      // [2 -2 1; -2 2 1; 1 1 1]
PayoffMatrix NonExploitingPayoff();   // [3 0 0; 0 3 0; 0 0 2]

// One-round simultaneous two-agent game. Both agents observe a single dummy
// symbol; actions are labelled "1".."m" in row order and
// reward(i, j) = payoff[i][j].
EnvPtr MakeMatrixGame(const PayoffMatrix& payoff);

struct CatDogSpec {
  double reveal_reward = -3.0;
  double bail_reward = 1.0;
  double guess_reward_magnitude = 10.0;
};

// Cat/dog signalling game.
//
// The pet (cat or dog, probability 1/2 each) is drawn by the initial
// distribution and seen only by Alice (agent 0). At t = 0 Alice chooses
// on, off, reveal or bail; Bob (agent 1) only has a no-op. Bail ends the game.
// Otherwise at t = 1 Bob sees on, off, cat or dog (the last two after a
// reveal) and chooses guess-cat, guess-dog or bail; Alice has a no-op.
// Rewards are emitted on transition, so the returns are
//   reveal + correct = reveal_reward + magnitude, signal + correct = magnitude,
//   signal + wrong = -magnitude, Alice bails = bail_reward,
//   Bob bails = (reveal_reward or 0) + bail_reward.
EnvPtr MakeCatDog(const CatDogSpec& spec = {});

namespace catdog {
inline constexpr int kAlice = 0;
inline constexpr int kBob = 1;
// Alice's action alphabet.
inline constexpr int kOn = 0;
inline constexpr int kOff = 1;
inline constexpr int kReveal = 2;
inline constexpr int kAliceBail = 3;
inline constexpr int kAliceNoop = 4;
// Bob's action alphabet.
inline constexpr int kGuessCat = 0;
inline constexpr int kGuessDog = 1;
inline constexpr int kBobBail = 2;
inline constexpr int kBobNoop = 3;
}  // namespace catdog

// Builds an environment from its JSON description:
//   {"kind": "matrix", "payoff": [[...], ...]} or
//   {"kind": "cat_dog", "reveal_reward": -3, "bail_reward": 1,
//    "guess_reward": 10}
// Throws ConfigError naming the offending key.
EnvPtr MakeEnvFromJson(const nlohmann::json& config);

}  // namespace xplab

#endif  // XPLAB_ENVS_H_
