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

// Discrete-time benchmark systems x_{t+1} = F(x_t, u_t) with running and
// terminal costs. Their rollouts define J(U) and hence E(U) = -J(U).

#ifndef GIBBS_CONTROL_ENVS_HPP_
#define GIBBS_CONTROL_ENVS_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"

namespace gibbs {

using StepFunction =
    std::function<Vector(std::span<const double>, std::span<const double>)>;
using RunningCost =
    std::function<double(std::span<const double>, std::span<const double>)>;
using TerminalCost = std::function<double(std::span<const double>)>;

struct DynamicsModel {
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  double dt = 0.1;
  StepFunction step;
  // Standard deviation of additive Gaussian state noise; 0 keeps F
  // deterministic.
  double process_noise = 0.0;
};

struct CostModel {
  RunningCost running;
  TerminalCost terminal;
};

struct Trajectory {
  std::vector<Vector> states;  // T + 1 states
  ControlSequence controls;    // T controls
  double total_cost = 0.0;

  std::size_t horizon() const { return controls.horizon(); }
  const Vector& final_state() const { return states.back(); }
};

/// Named system with its cost and a default initial state.
struct Environment {
  std::string name;
  DynamicsModel dynamics;
  CostModel cost;
  Vector initial_state;
};

/// Steps U through the dynamics from x0 and accumulates
/// J(U) = sum_t C(x_t, u_t) + C_f(x_T). The seed is only read when process
/// noise is enabled.
inline Trajectory rollout(const DynamicsModel& dynamics, const CostModel& cost,
                          std::span<const double> x0,
                          const ControlSequence& controls,
                          RunSeed seed = {}) {
  require(x0.size() == dynamics.state_dim,
          "rollout: initial state dimension mismatch");
  require(controls.dim() == dynamics.control_dim,
          "rollout: control dimension mismatch");
  require(controls.horizon() >= 1, "rollout: empty horizon");

  Trajectory traj{{}, controls, 0.0};
  traj.states.reserve(controls.horizon() + 1);
  traj.states.emplace_back(x0.begin(), x0.end());
  std::optional<CounterRng> rng;
  if (dynamics.process_noise > 0.0) rng.emplace(seed, 0);

  double total = 0.0;
  for (std::size_t t = 0; t < controls.horizon(); ++t) {
    const Vector& x = traj.states.back();
    const auto u = controls.step(t);
    total += cost.running(x, u);
    Vector next = dynamics.step(x, u);
    if (rng) {
      for (double& v : next) v += dynamics.process_noise * rng->normal();
    }
    traj.states.push_back(std::move(next));
  }
  total += cost.terminal(traj.states.back());
  traj.total_cost = total;
  return traj;
}

inline Trajectory rollout(const Environment& env,
                          std::span<const double> x0,
                          const ControlSequence& controls,
                          RunSeed seed = {}) {
  return rollout(env.dynamics, env.cost, x0, controls, seed);
}

/// E(U) = -J(U) rolled out from a fixed x0 with horizon and control
/// dimension taken from the flat control vector's length.
inline EnergyModel energy_of(const DynamicsModel& dynamics,
                             const CostModel& cost, Vector x0) {
  require(x0.size() == dynamics.state_dim,
          "energy_of: initial state dimension mismatch");
  return EnergyModel([dynamics, cost, x0 = std::move(x0)](
                         std::span<const double> u) {
    const std::size_t m = dynamics.control_dim;
    require(u.size() % m == 0 && !u.empty(),
            "energy: control vector length is not a multiple of m");
    const ControlSequence controls(u.size() / m, m, Vector(u.begin(), u.end()));
    return -rollout(dynamics, cost, x0, controls).total_cost;
  });
}

inline EnergyModel energy_of(const Environment& env, Vector x0) {
  return energy_of(env.dynamics, env.cost, std::move(x0));
}

// ---------------------------------------------------------------------------
// Double integrator: x = [p, v], p' = p + v dt, v' = v + u dt.

struct DoubleIntegratorParams {
  double dt = 0.1;
  double position_weight = 1.0;
  double velocity_weight = 0.1;
  double control_weight = 0.01;
  double terminal_weight = 10.0;
  double process_noise = 0.0;
};

inline Environment double_integrator(const DoubleIntegratorParams& p = {}) {
  Environment env;
  env.name = "double_integrator";
  env.dynamics.state_dim = 2;
  env.dynamics.control_dim = 1;
  env.dynamics.dt = p.dt;
  env.dynamics.process_noise = p.process_noise;
  env.dynamics.step = [dt = p.dt](std::span<const double> x,
                                  std::span<const double> u) {
    return Vector{x[0] + x[1] * dt, x[1] + u[0] * dt};
  };
  env.cost.running = [p](std::span<const double> x,
                         std::span<const double> u) {
    return p.position_weight * x[0] * x[0] + p.velocity_weight * x[1] * x[1] +
           p.control_weight * u[0] * u[0];
  };
  env.cost.terminal = [p](std::span<const double> x) {
    return p.terminal_weight * (x[0] * x[0] + x[1] * x[1]);
  };
  env.initial_state = {1.0, 0.0};
  return env;
}

// ---------------------------------------------------------------------------
// Pendulum: theta'' = -(g/l) sin(theta) + u, theta = 0 hanging down.
// Semi-implicit Euler.

struct PendulumParams {
  double dt = 0.05;
  double gravity = 9.81;
  double length = 1.0;
  double angle_weight = 1.0;
  double velocity_weight = 0.1;
  double control_weight = 0.001;
  double terminal_weight = 10.0;
  double process_noise = 0.0;
};

// Signed distance of theta from the upright position, in (-pi, pi].
inline double upright_error(double theta) {
  return std::remainder(theta - std::numbers::pi, 2.0 * std::numbers::pi);
}

inline Environment pendulum(const PendulumParams& p = {}) {
  Environment env;
  env.name = "pendulum";
  env.dynamics.state_dim = 2;
  env.dynamics.control_dim = 1;
  env.dynamics.dt = p.dt;
  env.dynamics.process_noise = p.process_noise;
  env.dynamics.step = [p](std::span<const double> x,
                          std::span<const double> u) {
    // sin(theta) = -sin(theta - pi); the shifted form is exactly zero upright.
    const double sin_theta = -std::sin(x[0] - std::numbers::pi);
    const double accel = -(p.gravity / p.length) * sin_theta + u[0];
    const double omega = x[1] + accel * p.dt;
    return Vector{x[0] + omega * p.dt, omega};
  };
  env.cost.running = [p](std::span<const double> x,
                         std::span<const double> u) {
    const double e = upright_error(x[0]);
    return p.angle_weight * e * e + p.velocity_weight * x[1] * x[1] +
           p.control_weight * u[0] * u[0];
  };
  env.cost.terminal = [p](std::span<const double> x) {
    const double e = upright_error(x[0]);
    return p.terminal_weight * (e * e + 0.1 * x[1] * x[1]);
  };
  env.initial_state = {0.0, 0.0};
  return env;
}

// ---------------------------------------------------------------------------
// 2D point-mass navigation around one circular obstacle. The state is the
// position and the control is the commanded velocity: x' = x + u dt.

struct CircleObstacle {
  std::array<double, 2> center{0.5, 0.5};
  double radius = 0.2;

  double distance(std::span<const double> position) const {
    return std::hypot(position[0] - center[0], position[1] - center[1]);
  }
  bool contains(std::span<const double> position) const {
    return distance(position) < radius;
  }
};

struct NavigationParams {
  double dt = 0.1;
  std::array<double, 2> start{0.0, 0.0};
  std::array<double, 2> goal{1.0, 1.0};
  CircleObstacle obstacle;
  double goal_weight = 1.0;
  double control_weight = 0.01;
  double terminal_weight = 10.0;
  // The penalty is obstacle_weight * softplus(k * depth) / ln 2 with depth the
  // signed penetration, so it equals obstacle_weight on the boundary.
  double obstacle_weight = 100.0;
  double obstacle_sharpness = 50.0;
  double process_noise = 0.0;
};

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double obstacle_penalty(const NavigationParams& p,
                               std::span<const double> position) {
  const double depth = p.obstacle.radius - p.obstacle.distance(position);
  return p.obstacle_weight * softplus(p.obstacle_sharpness * depth) /
         std::numbers::ln2;
}

inline Environment point_mass_navigation(const NavigationParams& p = {}) {
  Environment env;
  env.name = "navigation";
  env.dynamics.state_dim = 2;
  env.dynamics.control_dim = 2;
  env.dynamics.dt = p.dt;
  env.dynamics.process_noise = p.process_noise;
  env.dynamics.step = [dt = p.dt](std::span<const double> x,
                                  std::span<const double> u) {
    return Vector{x[0] + u[0] * dt, x[1] + u[1] * dt};
  };
  env.cost.running = [p](std::span<const double> x,
                         std::span<const double> u) {
    const double dx = x[0] - p.goal[0];
    const double dy = x[1] - p.goal[1];
    return p.goal_weight * (dx * dx + dy * dy) +
           p.control_weight * (u[0] * u[0] + u[1] * u[1]) +
           obstacle_penalty(p, x);
  };
  env.cost.terminal = [p](std::span<const double> x) {
    const double dx = x[0] - p.goal[0];
    const double dy = x[1] - p.goal[1];
    return p.terminal_weight * (dx * dx + dy * dy) + obstacle_penalty(p, x);
  };
  env.initial_state = {p.start[0], p.start[1]};
  return env;
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_ENVS_HPP_
