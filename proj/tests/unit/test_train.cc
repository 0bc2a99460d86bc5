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


#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "xplab/envs.h"
#include "xplab/eval.h"
#include "xplab/train.h"

namespace xplab {
namespace {

using doctest::Approx;

double Component(const ParameterTable& g, int agent, const std::string& key, int a) {
  const auto* v = g.Find(agent, key);
  return v ? (*v)[a] : 0.0;
}

// Central differences of the frozen-visitation surrogate around `policy`.
ParameterTable FiniteDifferenceGradient(const DecPomdp& env,
                                        const TabularJointPolicy& policy,
                                        double alpha, double h = 1e-5) {
  ParameterTable fd = policy.logits().ZerosLike();
  for (int i = 0; i < policy.num_agents(); ++i) {
    for (const auto& [key, logits] : policy.logits().agent(i)) {
      if (logits.size() < 2) continue;
      for (std::size_t a = 0; a < logits.size(); ++a) {
        TabularJointPolicy plus = policy, minus = policy;
        plus.MutableLogits(i, key, logits.size())[a] += h;
        minus.MutableLogits(i, key, logits.size())[a] -= h;
        fd.At(i, key, logits.size())[a] =
            (RegularizedSurrogate(env, policy, plus, alpha) -
             RegularizedSurrogate(env, policy, minus, alpha)) / (2 * h);
      }
    }
  }
  return fd;
}

double RelativeError(const ParameterTable& approx, const ParameterTable& exact) {
  ParameterTable diff = approx;
  diff.AddScaled(exact, -1.0);
  return diff.Norm() / std::max(exact.Norm(), 1e-12);
}

std::vector<Trajectory> Batch(const DecPomdp& env, const TabularJointPolicy& policy,
                              int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Trajectory> batch;
  for (int k = 0; k < n; ++k) batch.push_back(Rollout(env, policy, rng));
  return batch;
}

TrainConfig NoBaseline(double alpha) {
  TrainConfig c;
  c.entropy_coefficient = alpha;
  c.baseline = BaselineKind::kNone;
  return c;
}

TEST_CASE("one deterministic step: gradient is (one-hot - probs) * r") {
  auto env = MakeMatrixGame(ConventionPayoff());
  auto policy = testing::MatrixPolicy({0.3, -0.2, 0.1}, {1.0, 0.0, -1.0});
  Trajectory t;
  Step s;
  s.joint_action = {1, 0};
  s.choice = {1, 0};
  s.num_legal = {3, 3};
  s.aoh_keys = {"none", "none"};
  s.reward = -2.0;
  t.steps.push_back(s);
  t.final_state = 1;
  const std::vector<Trajectory> batch(4, t);
  const auto g = GradEstimate(*env, policy, NoBaseline(0.0), batch);
  const auto p0 = policy.ActionProbs(0, "none", 3);
  const auto p1 = policy.ActionProbs(1, "none", 3);
  for (int a = 0; a < 3; ++a) {
    CHECK(Component(g, 0, "none", a) ==
          Approx(((a == 1) - p0[a]) * -2.0).epsilon(1e-14));
    CHECK(Component(g, 1, "none", a) ==
          Approx(((a == 0) - p1[a]) * -2.0).epsilon(1e-14));
  }
}

TEST_CASE("malformed batches are rejected") {
  auto env = MakeMatrixGame(ConventionPayoff());
  TabularJointPolicy policy(2);
  Trajectory t = Rollout(*env, policy, 1);
  t.steps[0].choice = {5, 0};
  const std::vector<Trajectory> batch = {t};
  CHECK_THROWS_AS(GradEstimate(*env, policy, NoBaseline(0.0), batch), XplabError);
  t.steps[0].aoh_keys.pop_back();
  const std::vector<Trajectory> batch2 = {t};
  CHECK_THROWS_AS(GradEstimate(*env, policy, NoBaseline(0.0), batch2), XplabError);
}

TEST_CASE("uniform convention-game policy: the entropy term vanishes") {
  auto env = MakeMatrixGame(ConventionPayoff());
  TabularJointPolicy uniform(2);
  uniform.RegisterAll(*env);
  // Exactly zero under the exact gradient.
  for (double alpha : {0.5, 1.0, 8.0}) {
    ParameterTable diff = ExactGradient(*env, uniform, alpha);
    diff.AddScaled(ExactGradient(*env, uniform, 0.0), -1.0);
    CHECK(diff.Norm() <= 1e-15);
  }
  // Sampled: the entropy contribution is a mean of score functions times a
  // constant and shrinks like 1/sqrt(batch).
  const double alpha = 2.0;
  double previous = INFINITY;
  for (int n : {100, 10000, 1000000}) {
    const auto batch = Batch(*env, uniform, n, 17);
    ParameterTable diff = GradEstimate(*env, uniform, NoBaseline(alpha), batch);
    diff.AddScaled(GradEstimate(*env, uniform, NoBaseline(0.0), batch), -1.0);
    // Per component: alpha ln 3 * sqrt(p (1 - p) / n), 5 sigma.
    const double bound = 5 * alpha * std::log(3.0) * std::sqrt(2.0 / 9 / n);
    for (int i = 0; i < 2; ++i) {
      for (int a = 0; a < 3; ++a) CHECK(std::abs(Component(diff, i, "none", a)) <= bound);
    }
    CHECK(diff.Norm() < previous);
    previous = diff.Norm();
  }
}

TEST_CASE("shared parametrization: theta1 gradient is zero at the symmetric point") {
  auto env = MakeMatrixGame(ConventionPayoff());
  for (double alpha : {0.0, 1.0, 8.0}) {
    for (double theta2 : {0.0, -1.0, 2.0}) {
      SharedSymmetricPolicy s{0.0, theta2};
      const auto [d1, d2] =
          s.ProjectGradient(*env, ExactGradient(*env, s.ToJointPolicy(*env), alpha));
      CHECK(std::abs(d1) <= 1e-15);
      (void)d2;
    }
  }
}

TEST_CASE("exact gradient matches finite differences") {
  CatDogSpec harsh;
  harsh.reveal_reward = -8;
  for (const auto& env : {MakeMatrixGame(ConventionPayoff()),
                          MakeMatrixGame(NonExploitingPayoff()), MakeCatDog(),
                          MakeCatDog(harsh)}) {
    for (double alpha : {0.0, 1.0, 8.0}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto policy = testing::RandomPolicy(*env, 100 + seed, 1.0);
        const auto exact = ExactGradient(*env, policy, alpha);
        CHECK(RelativeError(FiniteDifferenceGradient(*env, policy, alpha), exact) <= 1e-6);
      }
    }
  }
}

TEST_CASE("one-step games: the surrogate is the regularized return itself") {
  auto env = MakeMatrixGame(ConventionPayoff());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ref = testing::RandomPolicy(*env, seed);
    auto other = testing::RandomPolicy(*env, seed + 50);
    CHECK(RegularizedSurrogate(*env, ref, other, 1.3) ==
          Approx(RegularizedReturn(*env, other, 1.3)).epsilon(1e-13));
  }
  // Shared parametrization, finite differences in (theta1, theta2).
  const double h = 1e-5;
  for (double alpha : {0.0, 1.0, 8.0}) {
    SharedSymmetricPolicy s{0.37, -0.81};
    const auto [d1, d2] =
        s.ProjectGradient(*env, ExactGradient(*env, s.ToJointPolicy(*env), alpha));
    auto f = [&](double t1, double t2) {
      return RegularizedReturn(*env, SharedSymmetricPolicy{t1, t2}.ToJointPolicy(*env),
                               alpha);
    };
    CHECK(d1 == Approx((f(s.theta1 + h, s.theta2) - f(s.theta1 - h, s.theta2)) / (2 * h))
                    .epsilon(1e-6));
    CHECK(d2 == Approx((f(s.theta1, s.theta2 + h) - f(s.theta1, s.theta2 - h)) / (2 * h))
                    .epsilon(1e-6));
  }
}

TEST_CASE("multi-step games: the estimator is not the gradient of the regularized return") {
  // Entropy bonuses are not credited to earlier decisions that change which
  // histories are visited, so the two differ on cat/dog.
  auto env = MakeCatDog();
  auto policy = testing::RandomPolicy(*env, 3);
  const auto exact = ExactGradient(*env, policy, 4.0);
  const double h = 1e-5;
  TabularJointPolicy plus = policy, minus = policy;
  plus.MutableLogits(0, "cat", 4)[catdog::kAliceBail] += h;
  minus.MutableLogits(0, "cat", 4)[catdog::kAliceBail] -= h;
  const double fd = (RegularizedReturn(*env, plus, 4.0) -
                     RegularizedReturn(*env, minus, 4.0)) / (2 * h);
  CHECK(std::abs(fd - Component(exact, 0, "cat", catdog::kAliceBail)) > 1e-3);
}

TEST_CASE("sampled estimator is unbiased") {
  CatDogSpec harsh;
  harsh.reveal_reward = -8;
  for (const auto& env : {MakeMatrixGame(ConventionPayoff()), MakeCatDog()}) {
    for (double alpha : {0.0, 1.0, 8.0}) {
      auto policy = testing::RandomPolicy(*env, 21, 0.7);
      const auto exact = ExactGradient(*env, policy, alpha);
      const int n = 20000;
      const auto batch = Batch(*env, policy, n, 99);
      ParameterTable sum = exact.ZerosLike(), sumsq = exact.ZerosLike();
      for (const auto& t : batch) {
        const auto g = GradEstimate(*env, policy, NoBaseline(alpha),
                                    std::span<const Trajectory>(&t, 1));
        sum.AddScaled(g, 1.0);
        for (int i = 0; i < 2; ++i) {
          for (const auto& [key, v] : g.agent(i)) {
            auto& sq = sumsq.At(i, key, v.size());
            for (std::size_t a = 0; a < v.size(); ++a) sq[a] += v[a] * v[a];
          }
        }
      }
      for (int i = 0; i < 2; ++i) {
        for (const auto& [key, v] : exact.agent(i)) {
          for (std::size_t a = 0; a < v.size(); ++a) {
            const double mean = Component(sum, i, key, a) / n;
            const double var = Component(sumsq, i, key, a) / n - mean * mean;
            const double se = std::sqrt(std::max(var, 0.0) * n / (n - 1) / n);
            CHECK(std::abs(mean - v[a]) <= 4 * se + 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("per-history baselines leave the expected gradient unchanged") {
  for (const auto& env : {MakeMatrixGame(NonExploitingPayoff()), MakeCatDog()}) {
    auto policy = testing::RandomPolicy(*env, 8);
    TrainConfig config;
    config.entropy_coefficient = 1.5;
    config.baseline = BaselineKind::kPerAohEma;
    EstimatorState state;
    state.ema_baseline = TabularCritic(2);
    double b = 1.0;
    for (int i = 0; i < 2; ++i) {
      for (const auto& [key, logits] : policy.logits().agent(i)) {
        state.ema_baseline.Set(i, key, b);
        b = -1.7 * b + 0.3;
      }
    }
    const auto expected = ExpectedGradEstimate(*env, policy, config, state);
    CHECK(RelativeError(expected, ExactGradient(*env, policy, 1.5)) <= 1e-12);

    config.entropy_baseline = true;
    const auto with_entropy = ExpectedGradEstimate(*env, policy, config, state);
    CHECK(RelativeError(with_entropy, ExactGradient(*env, policy, 1.5)) <= 1e-12);
  }
}

TEST_CASE("reward shift with the batch-mean baseline") {
  auto payoff = ConventionPayoff();
  auto shifted = payoff;
  for (auto& row : shifted) {
    for (double& v : row) v += 37.5;
  }
  auto env = MakeMatrixGame(payoff);
  auto env_shifted = MakeMatrixGame(shifted);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto policy = testing::RandomPolicy(*env, seed);
    // Exact expectation of the gradient is unchanged by the shift.
    CHECK(RelativeError(ExactGradient(*env_shifted, policy, 1.0),
                        ExactGradient(*env, policy, 1.0)) <= 1e-12);
    // With the batch-mean baseline the shift cancels batch by batch.
    TrainConfig config;
    config.entropy_coefficient = 1.0;
    config.baseline = BaselineKind::kBatchMean;
    const auto a = GradEstimate(*env, policy, config, Batch(*env, policy, 64, seed));
    const auto b = GradEstimate(*env_shifted, policy, config,
                                Batch(*env_shifted, policy, 64, seed));
    CHECK(RelativeError(b, a) <= 1e-12);
  }
  TrainConfig batch_mean;
  batch_mean.baseline = BaselineKind::kBatchMean;
  CHECK_THROWS_AS(ExpectedGradEstimate(*env, TabularJointPolicy(2), batch_mean),
                  XplabError);
}

TEST_CASE("critic advantage examples") {
  auto env = MakeCatDog();
  auto policy = testing::RandomPolicy(*env, 2);
  const TabularCritic zero(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory t = Rollout(*env, policy, seed);
    const auto g = t.ReturnsToGo(0.9);
    const auto mc = CriticAdvantages(t, zero, 0.9, 1.0);
    for (int s = 0; s < t.Length(); ++s) {
      for (int i = 0; i < 2; ++i) CHECK(mc[s][i] == g[s]);
    }
  }

  // One-step TD with hand-set values.
  CatDogSpec spec;
  testing::CatDogStrategy reveal;
  const Trajectory t = Rollout(*env, testing::CatDogPolicy(reveal), 3);
  REQUIRE(t.Length() == 2);
  TabularCritic critic(2);
  const std::string pet = t.steps[0].aoh_keys[0];
  critic.Set(0, pet, 2.0);
  critic.Set(0, pet + "|reveal|wait", 5.0);
  critic.Set(1, "none", -1.0);
  critic.Set(1, "none|noop|" + pet, 4.0);
  const auto td = CriticAdvantages(t, critic, 0.5, 0.0);
  CHECK(td[0][0] == -3.0 + 0.5 * 5.0 - 2.0);
  CHECK(td[0][1] == -3.0 + 0.5 * 4.0 + 1.0);
  CHECK(td[1][0] == 10.0 - 5.0);
  CHECK(td[1][1] == 10.0 - 4.0);
  const auto mixed = CriticAdvantages(t, critic, 0.5, 0.5);
  CHECK(mixed[0][0] == td[0][0] + 0.25 * td[1][0]);
}

TEST_CASE("a perfect critic of a deterministic policy gives zero advantages") {
  for (int convention : {0, 1}) {
    auto env = MakeCatDog();
    auto policy = testing::CatDogConvention(convention);
    const auto critic = ExactCritic(*env, policy);
    CHECK(critic.Value(0, "cat") == 10.0);
    CHECK(critic.Value(1, "none") == 10.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto adv = CriticAdvantages(Rollout(*env, policy, seed), critic, 1.0, 0.0);
      for (const auto& step : adv) {
        for (double a : step) CHECK(a == 0.0);
      }
    }
  }
  auto matrix = MakeMatrixGame(ConventionPayoff());
  const auto critic = ExactCritic(*matrix, testing::PureMatrixPolicy(3, 0, 0));
  CHECK(critic.Value(0, "none") == 2.0);
}

TEST_CASE("exact critic values are conditional expectations") {
  auto env = MakeCatDog();
  auto policy = testing::RandomPolicy(*env, 6);
  const auto critic = ExactCritic(*env, policy);
  // Bob's root history sees every episode: V = J_SP.
  CHECK(critic.Value(1, "none") == Approx(SpScore(*env, policy).mean).epsilon(1e-13));
  // Alice's pet histories average to J_SP as well.
  CHECK(0.5 * (critic.Value(0, "cat") + critic.Value(0, "dog")) ==
        Approx(SpScore(*env, policy).mean).epsilon(1e-13));
}

TEST_CASE("lambda = 1 with a zero critic is Monte Carlo bit for bit") {
  auto env = MakeCatDog();
  auto policy = testing::RandomPolicy(*env, 12);
  const auto batch = Batch(*env, policy, 256, 4);
  TrainConfig mc = NoBaseline(3.0);
  TrainConfig critic = mc;
  critic.advantage_mode = AdvantageMode::kLambdaCritic;
  critic.lambda = 1.0;
  EstimatorState zero;
  zero.critic = TabularCritic(2);
  CHECK(GradEstimate(*env, policy, critic, batch, zero) ==
        GradEstimate(*env, policy, mc, batch));

  // And through training, with the critic frozen at zero.
  mc.iterations = 50;
  mc.seed = 5;
  critic.iterations = 50;
  critic.seed = 5;
  critic.critic_lr = 0.0;
  CHECK(Train(env, critic).policy.logits() == Train(env, mc).policy.logits());
}

TEST_CASE("step schedules") {
  StepSchedule constant;
  CHECK(constant.Rate(1) == 0.05);
  CHECK(constant.Rate(1000) == 0.05);
  StepSchedule harmonic{ScheduleKind::kHarmonic, 1.0, 0.0};
  CHECK(harmonic.Rate(1) == 1.0);
  CHECK(harmonic.Rate(4) == 0.25);
  StepSchedule shifted{ScheduleKind::kHarmonic, 3.0, 30.0};
  CHECK(shifted.Rate(1) == 3.0 / 31.0);
}

TEST_CASE("train config JSON is strict and round-trips") {
  TrainConfig c;
  c.entropy_coefficient = 7.7;
  c.schedule = {ScheduleKind::kHarmonic, 3.0, 30.0};
  c.entropy_baseline = true;
  c.advantage_mode = AdvantageMode::kLambdaCritic;
  c.lambda = 0.5;
  c.seed = 42;
  c.gradient = GradientMode::kExact;
  const auto back = TrainConfig::FromJson(c.ToJson());
  CHECK(back.ToJson() == c.ToJson());
  CHECK(back.Digest() == c.Digest());

  TrainConfig other_seed = c;
  other_seed.seed = 43;
  CHECK(other_seed.Digest() == c.Digest());
  TrainConfig other_alpha = c;
  other_alpha.entropy_coefficient = 8.1;
  CHECK(other_alpha.Digest() != c.Digest());

  auto expect_error = [](const nlohmann::json& doc, const std::string& needle) {
    try {
      TrainConfig::FromJson(doc);
      FAIL("expected ConfigError for " << doc.dump());
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error({{"batch", 3}}, "batch");
  expect_error({{"batch_size", "many"}}, "batch_size");
  expect_error({{"batch_size", 0}}, "batch_size");
  expect_error({{"schedule", {{"kind", "cosine"}}}}, "schedule");
  expect_error({{"baseline", {{"kind", "none"}, {"decay", 2}}}}, "decay");
  expect_error({{"advantage", {{"lambda", 1.5}}}}, "lambda");
  expect_error({{"entropy_coefficient", -1}}, "entropy_coefficient");
}

TEST_CASE("training is deterministic and records provenance") {
  auto env = MakeCatDog();
  TrainConfig c;
  c.entropy_coefficient = 2.0;
  c.iterations = 100;
  c.seed = 77;
  c.init_noise_scale = 0.3;
  const auto a = Train(env, c);
  const auto b = Train(env, c);
  CHECK(a.policy.logits() == b.policy.logits());
  REQUIRE(a.log.rows.size() == 100);
  CHECK(a.log.rows.back().sp_estimate == b.log.rows.back().sp_estimate);
  CHECK(a.log.rows[0].iteration == 1);
  CHECK(a.policy.provenance().alpha == 2.0);
  CHECK(a.policy.provenance().seed == 77);
  CHECK(a.policy.provenance().config_digest == c.Digest());
  CHECK(a.policy.provenance().env_name == env->name);

  c.seed = 78;
  CHECK_FALSE(Train(env, c).policy.logits() == a.policy.logits());
}

TEST_CASE("training raises the self-play return") {
  auto env = MakeMatrixGame(NonExploitingPayoff());
  TrainConfig c;
  c.iterations = 500;
  c.seed = 3;
  c.init_noise_scale = 0.5;
  const auto r = Train(env, c);
  CHECK(SpScore(*env, Greedify(r.policy)).mean == 3.0);
  CHECK(r.log.rows.back().sp_estimate > 2.5);
}

TEST_CASE("harmonic exact-gradient training converges to the symmetric optimum") {
  // Above the landscape's symmetry threshold both agents settle on action 3
  // with equal first two probabilities. The curvature there is small, so the
  // k^-1 schedule is scaled up to converge within a few thousand steps.
  auto env = MakeMatrixGame(ConventionPayoff());
  TrainConfig c;
  c.entropy_coefficient = 1.5;
  c.gradient = GradientMode::kExact;
  c.schedule = {ScheduleKind::kHarmonic, 20.0, 20.0};
  c.iterations = 3000;
  c.init_noise_scale = 1.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    c.seed = seed;
    const auto r = Train(env, c);
    for (int i = 0; i < 2; ++i) {
      const auto p = r.policy.ActionProbs(i, "none", 3);
      CHECK(std::abs(p[0] - p[1]) < 1e-3);
      CHECK(p[2] > p[0]);
    }
    CHECK(SpScore(*env, Greedify(r.policy)).mean == 1.0);
  }
}

TEST_CASE("divergence is reported with the iteration") {
  auto env = MakeMatrixGame({{1e308, -1e308}, {-1e308, 1e308}});
  TrainConfig c;
  c.baseline = BaselineKind::kNone;
  c.iterations = 10;
  try {
    Train(env, c);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
  }
}

TEST_CASE("shared parametrization keeps both agents identical") {
  auto env = MakeMatrixGame(ConventionPayoff());
  TrainConfig c;
  c.parametrization = Parametrization::kSharedSymmetric;
  c.entropy_coefficient = 0.2;
  c.iterations = 300;
  c.init_noise_scale = 0.5;
  c.seed = 4;
  const auto r = Train(env, c);
  CHECK(r.policy.ActionProbs(0, "none", 3) == r.policy.ActionProbs(1, "none", 3));
  CHECK(r.policy.ActionProbs(0, "none", 3) == r.shared.Probs());
}

TEST_CASE("sweeps do not depend on the thread count") {
  auto env = MakeMatrixGame(ConventionPayoff());
  TrainConfig c;
  c.iterations = 60;
  c.seed = 9;
  const auto one = SweepAlpha(env, {0.1, 1.5}, 3, c, 1);
  const auto many = SweepAlpha(env, {0.1, 1.5}, 3, c, 4);
  REQUIRE(one.entries.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(one.entries[k].policy.logits() == many.entries[k].policy.logits());
    CHECK(one.entries[k].greedy_sp == many.entries[k].greedy_sp);
    CHECK(one.entries[k].argmax_labels == many.entries[k].argmax_labels);
  }
  CHECK(one.entries[4].alpha == 1.5);
  CHECK(one.entries[4].seed_index == 1);
  CHECK(one.entries[4].seed == DeriveSeed(9, 1, 1));
}

TEST_CASE("argmax labels") {
  auto env = MakeCatDog();
  const auto labels = ArgmaxLabels(*env, testing::CatDogConvention(0));
  const std::vector<std::string> expected = {
      "0:cat=on", "0:dog=off", "1:none|noop|cat=guess_cat",
      "1:none|noop|dog=guess_dog", "1:none|noop|off=guess_dog",
      "1:none|noop|on=guess_cat"};
  CHECK(labels == expected);
  auto matrix = MakeMatrixGame(ConventionPayoff());
  CHECK(ArgmaxLabels(*matrix, testing::MatrixPolicy({1, 1, 0}, {0, 0, 0}))[0] ==
        "0:none=1+2");
}

TEST_CASE("parallel-for rethrows the lowest failing index") {
  for (int threads : {1, 3}) {
    try {
      ParallelFor(10, threads, [](int k) {
        if (k == 4 || k == 7) throw XplabError("task " + std::to_string(k));
      });
      FAIL("expected an exception");
    } catch (const XplabError& e) {
      CHECK(std::string(e.what()) == "task 4");
    }
  }
}

}  // namespace
}  // namespace xplab
