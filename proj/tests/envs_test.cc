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

#include "gibbs_control/envs.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

namespace gibbs {
namespace {

TEST(RolloutTest, DoubleIntegratorAtEquilibrium) {
  const Environment env = double_integrator();
  const std::vector<double> x0 = {0.0, 0.0};
  const ControlSequence u(12, 1, 0.0);
  const Trajectory traj = rollout(env, x0, u);
  ASSERT_EQ(traj.states.size(), 13u);
  for (const auto& x : traj.states) {
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x[1], 0.0);
  }
  const double zero_state[] = {0.0, 0.0};
  const double zero_control[] = {0.0};
  const double expected = env.cost.terminal(zero_state) +
                          12 * env.cost.running(zero_state, zero_control);
  EXPECT_EQ(traj.total_cost, expected);
}

TEST(RolloutTest, PointMassTenStepRecurrence) {
  DoubleIntegratorParams p;
  p.dt = 0.1;
  const Environment env = double_integrator(p);
  const std::vector<double> x0 = {0.0, 0.0};
  const Trajectory traj = rollout(env, x0, ControlSequence(10, 1, 1.0));
  // Hand recurrence: p_T = dt^2 * sum_{k<10} k = 0.45, v_T = 1.0.
  EXPECT_NEAR(traj.final_state()[0], 0.45, 1e-12);
  EXPECT_NEAR(traj.final_state()[1], 1.0, 1e-12);
}

TEST(RolloutTest, PendulumStaysUpright) {
  const Environment env = pendulum();
  const std::vector<double> x0 = {std::numbers::pi, 0.0};
  const Trajectory traj = rollout(env, x0, ControlSequence(200, 1, 0.0));
  for (const auto& x : traj.states) {
    EXPECT_EQ(x[0], std::numbers::pi);
    EXPECT_EQ(x[1], 0.0);
  }
}

TEST(RolloutTest, DimensionMismatchIsContractViolation) {
  const Environment env = double_integrator();
  const std::vector<double> bad_x0 = {0.0};
  EXPECT_THROW(rollout(env, bad_x0, ControlSequence(3, 1)), ContractViolation);
  const std::vector<double> x0 = {0.0, 0.0};
  EXPECT_THROW(rollout(env, x0, ControlSequence(3, 2)), ContractViolation);
}

TEST(RolloutTest, ReplayingControlsReproducesStatesBitExactly) {
  const Environment env = pendulum();
  const std::vector<double> x0 = {0.3, -0.2};
  ControlSequence u(40, 1);
  for (std::size_t t = 0; t < u.horizon(); ++t) u[t] = std::sin(0.37 * t);
  const Trajectory traj = rollout(env, x0, u);
  std::vector<double> x = x0;
  double total = 0.0;
  for (std::size_t t = 0; t < u.horizon(); ++t) {
    ASSERT_EQ(x, traj.states[t]);
    total += env.cost.running(x, u.step(t));
    x = env.dynamics.step(x, u.step(t));
  }
  EXPECT_EQ(x, traj.final_state());
  total += env.cost.terminal(x);
  EXPECT_NEAR(total, traj.total_cost, 1e-10);
}

TEST(RolloutTest, CostIsAdditiveOverConcatenation) {
  const Environment env = double_integrator();
  const std::vector<double> x0 = {1.0, -0.5};
  ControlSequence first(6, 1), second(4, 1), joined(10, 1);
  for (std::size_t t = 0; t < 10; ++t) {
    const double v = std::cos(0.9 * t);
    joined[t] = v;
    if (t < 6) first[t] = v; else second[t - 6] = v;
  }
  const Trajectory a = rollout(env, x0, first);
  const Trajectory b = rollout(env, a.final_state(), second);
  const Trajectory whole = rollout(env, x0, joined);
  const double running_a = a.total_cost - env.cost.terminal(a.final_state());
  EXPECT_NEAR(whole.total_cost, running_a + b.total_cost, 1e-10);
}

TEST(RolloutTest, ProcessNoiseIsSeeded) {
  DoubleIntegratorParams p;
  p.process_noise = 0.1;
  const Environment env = double_integrator(p);
  const std::vector<double> x0 = {0.0, 0.0};
  const ControlSequence u(5, 1, 0.0);
  const Trajectory a = rollout(env, x0, u, {5, 0});
  const Trajectory b = rollout(env, x0, u, {5, 0});
  const Trajectory c = rollout(env, x0, u, {6, 0});
  EXPECT_EQ(a.states, b.states);
  EXPECT_NE(a.states, c.states);
}

TEST(EnergyOfTest, SignIdentity) {
  // Zero weights everywhere: J = 0 for every U.
  DoubleIntegratorParams p;
  p.position_weight = p.velocity_weight = p.control_weight = 0.0;
  p.terminal_weight = 0.0;
  const EnergyModel e = energy_of(double_integrator(p), {1.0, 2.0});
  EXPECT_EQ(e(ControlSequence(5, 1, 3.0)), 0.0);
}

TEST(EnergyOfTest, QuadraticControlCost) {
  // J(U) = 1/2 ||U||^2 with the state frozen.
  DynamicsModel frozen{1, 1, 0.1,
                       [](std::span<const double> x, std::span<const double>) {
                         return Vector(x.begin(), x.end());
                       }};
  CostModel cost{[](std::span<const double>, std::span<const double> u) {
                   return 0.5 * u[0] * u[0];
                 },
                 [](std::span<const double>) { return 0.0; }};
  const EnergyModel e = energy_of(frozen, cost, {0.0});
  const ControlSequence u(3, 1, std::vector<double>{1.0, -2.0, 0.5});
  EXPECT_DOUBLE_EQ(e(u), -0.5 * (1.0 + 4.0 + 0.25));
}

TEST(EnergyOfTest, CollisionCostsAtLeastThePenaltyWeight) {
  NavigationParams p;
  p.goal_weight = 0.0;
  p.terminal_weight = 0.0;
  const Environment env = point_mass_navigation(p);
  const EnergyModel energy = energy_of(env, {0.0, 0.0});
  // Same control magnitude; one heads through the obstacle at (0.5, 0.5),
  // the other heads away from it.
  ControlSequence through(10, 2), away(10, 2);
  for (std::size_t t = 0; t < 10; ++t) {
    through.step(t)[0] = through.step(t)[1] = 0.707;
    away.step(t)[0] = away.step(t)[1] = -0.707;
  }
  const Trajectory hit = rollout(env, env.initial_state, through);
  bool collided = false;
  for (const auto& x : hit.states) collided |= p.obstacle.contains(x);
  ASSERT_TRUE(collided);
  const Trajectory miss = rollout(env, env.initial_state, away);
  for (const auto& x : miss.states) ASSERT_FALSE(p.obstacle.contains(x));
  EXPECT_LE(energy(through), energy(away) - p.obstacle_weight);
}

TEST(NavigationTest, PenaltyEqualsWeightOnBoundary) {
  NavigationParams p;
  const double boundary[] = {p.obstacle.center[0] + p.obstacle.radius,
                             p.obstacle.center[1]};
  EXPECT_NEAR(obstacle_penalty(p, boundary), p.obstacle_weight, 1e-9);
}

}  // namespace
}  // namespace gibbs
