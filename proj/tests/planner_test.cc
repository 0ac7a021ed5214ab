// Copyright 2026 The Gibbs Control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gibbs_control/planner.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

namespace gibbs {
namespace {

const TrajectoryLayout kTiny{1, 1, 2};  // [s0, a0, s1, a1]

TEST(DenoiseMeanTest, SingleDemonstrationPullsTowardIt) {
  const KdeDataModel prior({{0.0, 1.0, 0.1, 1.0}}, 0.0);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 2.0, 10);
  const Vector plan = {0.5, -0.5, 0.3, 2.0};
  for (std::size_t i : {1u, 2u, 3u}) {
    const Vector mu = denoise_mean(prior, ve, plan, i);
    for (std::size_t k = 0; k < plan.size(); ++k) {
      EXPECT_LT(std::abs(mu[k] - prior.points[0][k]),
                std::abs(plan[k] - prior.points[0][k]));
    }
  }
}

TEST(DenoiseMeanTest, DataPointIsAFixedPointAtSmallNoise) {
  const KdeDataModel prior({{0.0, 1.0, 0.1, 1.0}, {1.0, 0.0, 1.0, 0.0}}, 0.0);
  const auto ve = NoiseSchedule::variance_exploding({1e-4, 1e-3});
  const Vector mu = denoise_mean(prior, ve, prior.points[1], 1);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    EXPECT_NEAR(mu[k], prior.points[1][k], 1e-15);
  }
}

TEST(DenoiseMeanTest, EquidistantPlanReturnsTheAverage) {
  // Equal posterior weights: score = (mean of points - x) / var = 0 at the
  // midpoint, so the reverse mean is the midpoint itself.
  const Vector a = {0.0, 1.0, 0.2, 0.5};
  const Vector b = {1.0, -1.0, 0.6, 0.1};
  const KdeDataModel prior({a, b}, 0.1);
  const auto ve = NoiseSchedule::ve_geometric(0.05, 1.0, 5);
  Vector mid(4);
  for (std::size_t k = 0; k < 4; ++k) mid[k] = 0.5 * (a[k] + b[k]);
  const Vector mu = denoise_mean(prior, ve, mid, 3);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(mu[k], mid[k], 1e-14);
}

TEST(DenoiseMeanTest, StepOutOfRange) {
  const KdeDataModel prior({{0.0, 0.0, 0.0, 0.0}}, 0.1);
  const auto ve = NoiseSchedule::ve_geometric(0.05, 1.0, 5);
  EXPECT_THROW(denoise_mean(prior, ve, prior.points[0], 0), ContractViolation);
  EXPECT_THROW(denoise_mean(prior, ve, prior.points[0], 6), ContractViolation);
}

// ------------------------------ guided step ----------------------------------

struct GuidedFixture {
  KdeDataModel prior{{{0.0, 1.0, 0.1, 1.0}, {0.0, -1.0, -0.1, -1.0}}, 0.05};
  NoiseSchedule schedule = NoiseSchedule::ve_geometric(0.01, 1.0, 8);
  TrajectoryPlan plan{{0.3, 0.2, -0.4, 0.9}, 5};
  Vector observed{0.25};
};

GuidanceConfig quadratic_guidance(double alpha, Vector goal, bool analytic) {
  GuidanceConfig g;
  g.scale = alpha;
  g.energy = EnergyModel([goal](std::span<const double> x) {
    double sq = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sq += (x[k] - goal[k]) * (x[k] - goal[k]);
    return -0.5 * sq;
  });
  if (analytic) {
    g.gradient = [goal](std::span<const double> x) {
      Vector d(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) d[k] = goal[k] - x[k];
      return d;
    };
  }
  return g;
}

TEST(GuidedReverseStepTest, ZeroScaleIsThePriorStepWithClamping) {
  GuidedFixture f;
  CounterRng rng({3, 0}, 0), replay({3, 0}, 0);
  const auto step = guided_reverse_step(f.plan, f.prior, f.schedule, kTiny,
                                        GuidanceConfig{}, f.observed, rng);
  const Vector s = analytic_score(f.prior, f.schedule, 5, f.plan.values);
  const auto m = reverse_step_moments(f.schedule, SamplerKind::kAncestral, 5,
                                      f.plan.values, s);
  const double sd = std::sqrt(m.noise_variance);
  EXPECT_EQ(step.plan.step, 4u);
  EXPECT_EQ(step.plan.values[0], f.observed[0]);
  replay.normal();  // the s0 draw is overwritten by the clamp
  for (std::size_t k = 1; k < 4; ++k) {
    EXPECT_EQ(step.plan.values[k], m.mean[k] + sd * replay.normal());
  }
}

TEST(GuidedReverseStepTest, QuadraticGuidanceShiftsTowardGoal) {
  GuidedFixture f;
  const Vector goal = {1.0, 2.0, 3.0, 4.0};
  const double alpha = 7.0;
  CounterRng rng({4, 0}, 0);
  const auto step =
      guided_reverse_step(f.plan, f.prior, f.schedule, kTiny,
                          quadratic_guidance(alpha, goal, true), f.observed, rng);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(step.shift[k],
                     alpha * step.step_variance * (goal[k] - step.prior_mean[k]));
  }
  // Central differences are exact on a quadratic up to rounding.
  CounterRng rng2({4, 0}, 0);
  const auto fd =
      guided_reverse_step(f.plan, f.prior, f.schedule, kTiny,
                          quadratic_guidance(alpha, goal, false), f.observed, rng2);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(fd.shift[k], step.shift[k], 1e-8);
}

TEST(GuidedReverseStepTest, MeanShiftIdentityUnderSharedRandomness) {
  GuidedFixture f;
  CounterRng a({5, 0}, 0), b({5, 0}, 0);
  const auto guided = guided_reverse_step(
      f.plan, f.prior, f.schedule, kTiny,
      quadratic_guidance(2.0, {1, 1, 1, 1}, true), f.observed, a);
  const auto plain = guided_reverse_step(f.plan, f.prior, f.schedule, kTiny,
                                         GuidanceConfig{}, f.observed, b);
  EXPECT_EQ(guided.prior_mean, plain.prior_mean);
  EXPECT_EQ(guided.noise, plain.noise);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(guided.mean[k], guided.prior_mean[k] + guided.shift[k]);
    EXPECT_NEAR(guided.mean[k] - plain.mean[k], guided.shift[k], 1e-15);
  }
}

TEST(GuidedReverseStepTest, ClampIsIdempotent) {
  GuidedFixture f;
  CounterRng rng({6, 0}, 0);
  const auto step = guided_reverse_step(f.plan, f.prior, f.schedule, kTiny,
                                        GuidanceConfig{}, f.observed, rng);
  Vector again = step.plan.values;
  clamp_initial_state(kTiny, again, f.observed);
  EXPECT_EQ(again, step.plan.values);
}

TEST(GuidedReverseStepTest, NonFiniteGradientNamesSlots) {
  GuidedFixture f;
  GuidanceConfig g;
  g.scale = 1.0;
  g.gradient = [](std::span<const double> x) {
    Vector d(x.size(), 0.0);
    d[2] = std::numeric_limits<double>::quiet_NaN();
    return d;
  };
  CounterRng rng({7, 0}, 0);
  try {
    guided_reverse_step(f.plan, f.prior, f.schedule, kTiny, g, f.observed, rng);
    FAIL() << "expected GuidanceFailure";
  } catch (const GuidanceFailure& e) {
    EXPECT_EQ(e.slots(), std::vector<std::size_t>{2});
  }
}

TEST(GuidedReverseStepTest, NegativeScaleIsRejected) {
  GuidedFixture f;
  GuidanceConfig g;
  g.scale = -1.0;
  CounterRng rng({8, 0}, 0);
  EXPECT_THROW(
      guided_reverse_step(f.plan, f.prior, f.schedule, kTiny, g, f.observed, rng),
      ContractViolation);
}

TEST(PlanTrajectoryTest, EveryStepKeepsTheObservedState) {
  GuidedFixture f;
  CounterRng rng({9, 0}, 0);
  TrajectoryPlan plan{Vector(4, 0.0), f.schedule.steps()};
  clamp_initial_state(kTiny, plan.values, f.observed);
  const auto g = quadratic_guidance(0.5, {0, 0, 0, 0}, false);
  while (plan.step > 0) {
    plan = guided_reverse_step(plan, f.prior, f.schedule, kTiny, g, f.observed, rng)
               .plan;
    ASSERT_EQ(plan.values[0], f.observed[0]);
  }
}

// ------------------------------ demonstrations -------------------------------

TEST(DemonstrationTest, SafeDemosAvoidTheObstacle) {
  DemonstrationParams p;
  const auto demos = make_demonstrations(p);
  ASSERT_EQ(demos.size(), 200u);
  for (const auto& d : demos) {
    for (std::size_t t = 0; t + 1 < d.states.size(); ++t) {
      ASSERT_FALSE(segment_penetrates(p.obstacle, d.states[t], d.states[t + 1]));
      for (int a = 0; a < 2; ++a) {
        ASSERT_NEAR(d.states[t][a] + p.dt * d.actions[t][a], d.states[t + 1][a],
                    1e-12);
      }
    }
    EXPECT_NEAR(d.states.back()[0], p.goal[0], 1e-12);
    EXPECT_NEAR(d.states.back()[1], p.goal[1], 1e-12);
  }
}

TEST(DemonstrationTest, RandomizedDemosMostlyCutThrough) {
  DemonstrationParams p;
  p.randomized = true;
  std::size_t through = 0;
  const auto demos = make_demonstrations(p);
  for (const auto& d : demos) {
    bool hit = false;
    for (std::size_t t = 0; t + 1 < d.states.size(); ++t) {
      hit |= segment_penetrates(p.obstacle, d.states[t], d.states[t + 1]);
    }
    through += hit;
  }
  EXPECT_GT(through, demos.size() / 2);
}

TEST(DemonstrationTest, WindowsArePaddedWithGoalAndZeroAction) {
  Demonstration d;
  d.states = {{0.0}, {1.0}, {2.0}};
  d.actions = {{10.0}, {10.0}};
  const auto w = demonstration_windows({d}, kTiny, 1);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], (Vector{0.0, 10.0, 1.0, 10.0}));
  EXPECT_EQ(w[1], (Vector{1.0, 10.0, 2.0, 0.0}));
  EXPECT_EQ(w[2], (Vector{2.0, 0.0, 2.0, 0.0}));
}

// ------------------------------ receding horizon -----------------------------

Environment zero_dynamics_toy() {
  Environment env;
  env.name = "toy";
  env.dynamics = {1, 1, 1.0,
                  [](std::span<const double> x, std::span<const double> u) {
                    return Vector{x[0] + u[0]};
                  }};
  env.cost = {[](std::span<const double>, std::span<const double> u) {
                return u[0] * u[0];
              },
              [](std::span<const double>) { return 0.0; }};
  env.initial_state = {0.0};
  return env;
}

TEST(PlanAndExecuteTest, ToyWithGoalAtStartCompletesInOneStep) {
  PlanningTask task{zero_dynamics_toy(), kTiny, {0.0}, 0.1, 10, std::nullopt};
  const KdeDataModel prior({{0.0, 0.0, 0.0, 0.0}}, 0.01);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 1.0, 10);
  const auto logs = plan_and_execute(task, prior, ve, GuidanceConfig{}, 3, {1, 0});
  for (const auto& log : logs) {
    EXPECT_TRUE(log.success);
    EXPECT_EQ(log.steps, 1u);
  }
}

TEST(PlanAndExecuteTest, StepCapExhaustionIsAFailedEpisode) {
  PlanningTask task{zero_dynamics_toy(), kTiny, {5.0}, 0.1, 4, std::nullopt};
  const KdeDataModel prior({{0.0, 0.0, 0.0, 0.0}}, 0.01);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 1.0, 10);
  const auto logs = plan_and_execute(task, prior, ve, GuidanceConfig{}, 2, {2, 0});
  for (const auto& log : logs) {
    EXPECT_FALSE(log.success);
    EXPECT_EQ(log.steps, 4u);
  }
}

TEST(PlanAndExecuteTest, ExecutedActionIsTheFirstPlansActionSlot) {
  PlanningTask task{zero_dynamics_toy(), kTiny, {0.5}, 0.1, 1, std::nullopt};
  const KdeDataModel prior({{0.0, 0.5, 0.5, 0.0}}, 0.01);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 1.0, 10);
  const auto logs = plan_and_execute(task, prior, ve, GuidanceConfig{}, 1, {3, 0});
  ASSERT_EQ(logs[0].actions.size(), 1u);
  EXPECT_EQ(logs[0].actions[0][0], logs[0].first_plan[kTiny.action_offset(0)]);
  EXPECT_EQ(logs[0].first_plan[0], 0.0);
}

TEST(PlanAndExecuteTest, PriorDimensionMustMatchLayout) {
  PlanningTask task{zero_dynamics_toy(), kTiny, {0.0}, 0.1, 1, std::nullopt};
  const KdeDataModel prior({{0.0, 0.0}}, 0.01);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 1.0, 10);
  EXPECT_THROW(plan_and_execute(task, prior, ve, GuidanceConfig{}, 1, {0, 0}),
               ContractViolation);
}

TEST(PlanAndExecuteTest, SeededEpisodesAreReproducible) {
  TrajectoryLayout layout{2, 2, 4};
  const auto prior = KdeDataModel(
      demonstration_windows(make_demonstrations({}), layout, 2), 0.05);
  const auto ve = NoiseSchedule::ve_geometric(0.01, 0.7, 30);
  const Environment env = point_mass_navigation();
  PlanningTask task{env, layout, {1.0, 1.0}, 0.1, 5, CircleObstacle{}};
  const auto g = rollout_guidance(env, layout, 5.0);
  const auto a = plan_and_execute(task, prior, ve, g, 2, {11, 0});
  const auto b = plan_and_execute(task, prior, ve, g, 2, {11, 0});
  for (std::size_t e = 0; e < 2; ++e) EXPECT_EQ(a[e].states, b[e].states);
}

}  // namespace
}  // namespace gibbs
