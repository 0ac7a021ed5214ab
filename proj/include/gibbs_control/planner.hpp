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

// Guided diffusion planning under a demonstration prior.
//
// A plan is a flat vector of per-step blocks [s_t, a_t], t = 0..H-1. One
// guided reverse step from step i:
//
//   mu      = reverse-kernel mean of the prior (z = 0)
//   tau^i-1 ~ N(mu + alpha Sigma grad E(mu), Sigma)
//
// followed by overwriting the s_0 slots with the observed state. Sigma is
// the sampler's step variance unless overridden.

#ifndef GIBBS_CONTROL_PLANNER_HPP_
#define GIBBS_CONTROL_PLANNER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/diffusion.hpp"
#include "gibbs_control/envs.hpp"

namespace gibbs {

class GuidanceFailure : public std::runtime_error {
 public:
  GuidanceFailure(const std::string& what, std::vector<std::size_t> slots)
      : std::runtime_error(what), slots_(std::move(slots)) {}
  const std::vector<std::size_t>& slots() const { return slots_; }

 private:
  std::vector<std::size_t> slots_;
};

/// Slot layout of a plan: block t holds s_t then a_t.
struct TrajectoryLayout {
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  std::size_t horizon = 16;

  std::size_t block() const { return state_dim + action_dim; }
  std::size_t size() const { return block() * horizon; }
  std::size_t state_offset(std::size_t t) const { return t * block(); }
  std::size_t action_offset(std::size_t t) const {
    return t * block() + state_dim;
  }

  void validate() const {
    require(state_dim >= 1 && action_dim >= 1 && horizon >= 1,
            "TrajectoryLayout: dimensions must be positive");
  }
};

struct TrajectoryPlan {
  Vector values;
  std::size_t step = 0;  // diffusion step index i
};

inline void clamp_initial_state(const TrajectoryLayout& layout, Vector& plan,
                                std::span<const double> state) {
  require(state.size() == layout.state_dim, "clamp: state dimension mismatch");
  std::copy(state.begin(), state.end(), plan.begin());
}

using GradientFunction = std::function<Vector(std::span<const double>)>;

struct GuidanceConfig {
  double scale = 0.0;  // alpha
  EnergyModel energy;
  // Analytic gradient; central differences on `energy` when empty.
  GradientFunction gradient;
  double fd_step = 1e-5;
  // Energies that depend on the observed state (rollouts from s) are rebuilt
  // from it before each plan; overrides `energy` when set.
  std::function<EnergyModel(std::span<const double>)> energy_at;
  // Replaces the sampler's step variance as Sigma when set.
  std::optional<double> step_variance;
  SamplerKind sampler = SamplerKind::kAncestral;

  void validate() const {
    require(std::isfinite(scale) && scale >= 0.0,
            "GuidanceConfig: scale must be >= 0");
    require(scale == 0.0 || static_cast<bool>(energy) ||
                static_cast<bool>(gradient) || static_cast<bool>(energy_at),
            "GuidanceConfig: nonzero scale needs a guidance energy");
    require(fd_step > 0.0, "GuidanceConfig: fd_step must be positive");
    if (step_variance) {
      require(std::isfinite(*step_variance) && *step_variance >= 0.0,
              "GuidanceConfig: step_variance must be >= 0");
    }
  }
};

inline Vector central_difference_gradient(const EnergyModel& energy,
                                          std::span<const double> x,
                                          double h) {
  Vector probe(x.begin(), x.end());
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + h;
    const double up = energy(probe);
    probe[k] = saved - h;
    const double down = energy(probe);
    probe[k] = saved;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Vector guidance_gradient(const GuidanceConfig& guidance,
                                std::span<const double> x) {
  Vector g = guidance.gradient
                 ? guidance.gradient(x)
                 : central_difference_gradient(guidance.energy, x,
                                               guidance.fd_step);
  require(g.size() == x.size(), "guidance gradient: wrong length");
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(g[k])) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "guidance gradient is not finite in slots";
    for (std::size_t k : bad) msg << ' ' << k;
    throw GuidanceFailure(msg.str(), std::move(bad));
  }
  return g;
}

/// mu_theta(tau^i): reverse-kernel mean with z = 0 under the prior's analytic
/// score.
inline Vector denoise_mean(const KdeDataModel& prior,
                           const NoiseSchedule& schedule,
                           std::span<const double> plan, std::size_t i,
                           SamplerKind sampler = SamplerKind::kAncestral) {
  schedule.check_step(i);
  require(plan.size() == prior.dim(), "denoise_mean: plan length mismatch");
  const Vector s = analytic_score(prior, schedule, i, plan);
  return reverse_step_moments(schedule, sampler, i, plan, s).mean;
}

/// Everything one guided step computed, so callers can check
/// mean = prior_mean + shift and sample = mean + noise slot by slot.
struct GuidedStep {
  TrajectoryPlan plan;  // tau^{i-1}, clamped
  Vector prior_mean;    // mu
  Vector shift;         // alpha Sigma grad E(mu)
  Vector mean;          // mu + shift
  Vector noise;         // sqrt(Sigma) z
  double step_variance = 0.0;
};

inline GuidedStep guided_reverse_step(const TrajectoryPlan& plan,
                                      const KdeDataModel& prior,
                                      const NoiseSchedule& schedule,
                                      const TrajectoryLayout& layout,
                                      const GuidanceConfig& guidance,
                                      std::span<const double> observed,
                                      CounterRng& rng) {
  guidance.validate();
  require(plan.step >= 1, "guided_reverse_step: plan is already at step 0");
  require(plan.values.size() == layout.size(),
          "guided_reverse_step: plan does not match layout");
  GuidedStep out;
  const std::size_t i = plan.step;
  const Vector s = analytic_score(prior, schedule, i, plan.values);
  const ReverseStep moments =
      reverse_step_moments(schedule, guidance.sampler, i, plan.values, s);
  out.prior_mean = moments.mean;
  out.step_variance = guidance.step_variance.value_or(moments.noise_variance);

  const std::size_t n = out.prior_mean.size();
  out.shift.assign(n, 0.0);
  if (guidance.scale > 0.0) {
    const Vector g = guidance_gradient(guidance, out.prior_mean);
    for (std::size_t k = 0; k < n; ++k) {
      out.shift[k] = guidance.scale * out.step_variance * g[k];
    }
  }
  const double sd = std::sqrt(out.step_variance);
  out.mean.resize(n);
  out.noise.resize(n);
  out.plan.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.mean[k] = out.prior_mean[k] + out.shift[k];
    out.noise[k] = sd * rng.normal();
    out.plan.values[k] = out.mean[k] + out.noise[k];
  }
  out.plan.step = i - 1;
  clamp_initial_state(layout, out.plan.values, observed);
  return out;
}

/// Fresh tau^N from the schedule's prior, clamped, then N guided steps.
inline TrajectoryPlan plan_trajectory(const KdeDataModel& prior,
                                      const NoiseSchedule& schedule,
                                      const TrajectoryLayout& layout,
                                      const GuidanceConfig& config,
                                      std::span<const double> observed,
                                      CounterRng& rng) {
  GuidanceConfig guidance = config;
  if (config.energy_at) {
    guidance.energy = config.energy_at(observed);
    guidance.energy_at = nullptr;
  }
  TrajectoryPlan plan;
  plan.step = schedule.steps();
  plan.values.resize(layout.size());
  const double sd = std::sqrt(schedule.prior_variance());
  for (double& v : plan.values) v = sd * rng.normal();
  clamp_initial_state(layout, plan.values, observed);
  while (plan.step > 0) {
    plan = guided_reverse_step(plan, prior, schedule, layout, guidance,
                               observed, rng)
               .plan;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Demonstrations

struct Demonstration {
  std::vector<Vector> states;   // T + 1
  std::vector<Vector> actions;  // T, a_t = (s_{t+1} - s_t) / dt
};

/// Quadratic Bezier paths to the goal timed by a minimum-jerk profile.
/// A `scattered_fraction` share of demos starts at a uniform point of the
/// workspace box (outside the obstacle margin), the rest at `start`. When
/// the straight line passes within `clearance` of the obstacle the via point
/// is placed so the curve's midpoint sits `clearance` from the center, on
/// the side the line already leans to (ties go left of the direction of
/// travel, or right for a `mirror_fraction` share). Duration scales with
/// path length at `mean_speed`. `randomized` ignores the obstacle and
/// scatters the via point around the midpoint instead, so those paths
/// usually cut through it.
struct DemonstrationParams {
  std::size_t count = 200;
  double dt = 0.1;
  std::array<double, 2> start{0.0, 0.0};
  std::array<double, 2> goal{1.0, 1.0};
  CircleObstacle obstacle;
  double clearance = 0.35;
  double scattered_fraction = 0.5;
  std::array<double, 2> box_lower{-0.3, -0.3};
  std::array<double, 2> box_upper{1.3, 1.3};
  double start_jitter = 0.02;
  double mean_speed = 0.5;
  std::size_t min_steps = 5;
  double mirror_fraction = 0.0;
  double via_noise = 0.05;
  bool randomized = false;
  double randomized_spread = 0.15;
  RunSeed seed{20261019, 0};
};

inline double minimum_jerk(double s) {
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

namespace detail {

inline std::array<double, 2> avoiding_via(const DemonstrationParams& p,
                                          const std::array<double, 2>& from,
                                          bool mirrored) {
  const auto& c = p.obstacle.center;
  const double mx = 0.5 * (from[0] + p.goal[0]);
  const double my = 0.5 * (from[1] + p.goal[1]);
  const double dx = p.goal[0] - from[0], dy = p.goal[1] - from[1];
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0
                 ? ((c[0] - from[0]) * dx + (c[1] - from[1]) * dy) / len2
                 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double qx = from[0] + s * dx - c[0];
  const double qy = from[1] + s * dy - c[1];
  const double dist = std::hypot(qx, qy);
  if (dist >= p.clearance) return {mx, my};
  double nx, ny;
  if (dist > 1e-9) {
    nx = qx / dist;
    ny = qy / dist;
  } else {
    const double len = std::sqrt(len2);
    nx = -dy / len;
    ny = dx / len;
    if (mirrored) {
      nx = -nx;
      ny = -ny;
    }
  }
  // B(1/2) = (m + via) / 2.
  return {2.0 * (c[0] + p.clearance * nx) - mx,
          2.0 * (c[1] + p.clearance * ny) - my};
}

}  // namespace detail

inline std::vector<Demonstration> make_demonstrations(
    const DemonstrationParams& p) {
  require(p.count >= 1 && p.dt > 0.0 && p.mean_speed > 0.0 &&
              p.min_steps >= 1,
          "make_demonstrations: empty request");
  std::vector<Demonstration> demos(p.count);
  for (std::size_t d = 0; d < p.count; ++d) {
    CounterRng rng(p.seed, d);
    std::array<double, 2> from = p.start;
    if (rng.uniform() < p.scattered_fraction) {
      do {
        for (int a = 0; a < 2; ++a) {
          from[a] = p.box_lower[a] +
                    (p.box_upper[a] - p.box_lower[a]) * rng.uniform();
        }
      } while (p.obstacle.distance(from) < p.obstacle.radius + p.via_noise);
    } else {
      for (double& v : from) v += p.start_jitter * rng.normal();
    }
    std::array<double, 2> via;
    if (p.randomized) {
      for (int a = 0; a < 2; ++a) {
        via[a] = 0.5 * (from[a] + p.goal[a]) + p.randomized_spread * rng.normal();
      }
    } else {
      via = detail::avoiding_via(p, from, rng.uniform() < p.mirror_fraction);
      for (double& v : via) v += p.via_noise * rng.normal();
    }
    // Arc length of the Bezier by a fine polyline.
    double length = 0.0;
    for (int k = 0; k < 64; ++k) {
      double pt[2][2];
      for (int e = 0; e < 2; ++e) {
        const double s = (k + e) / 64.0;
        for (int a = 0; a < 2; ++a) {
          pt[e][a] = (1 - s) * (1 - s) * from[a] + 2 * s * (1 - s) * via[a] +
                     s * s * p.goal[a];
        }
      }
      length += std::hypot(pt[1][0] - pt[0][0], pt[1][1] - pt[0][1]);
    }
    const std::size_t steps = std::max(
        p.min_steps,
        static_cast<std::size_t>(std::ceil(length / (p.mean_speed * p.dt))));
    Demonstration& demo = demos[d];
    for (std::size_t t = 0; t <= steps; ++t) {
      const double s = minimum_jerk(static_cast<double>(t) / steps);
      Vector x(2);
      for (int a = 0; a < 2; ++a) {
        x[a] = (1 - s) * (1 - s) * from[a] + 2 * s * (1 - s) * via[a] +
               s * s * p.goal[a];
      }
      demo.states.push_back(std::move(x));
    }
    for (std::size_t t = 0; t < steps; ++t) {
      demo.actions.push_back({(demo.states[t + 1][0] - demo.states[t][0]) / p.dt,
                              (demo.states[t + 1][1] - demo.states[t][1]) / p.dt});
    }
  }
  return demos;
}

/// Horizon-H windows starting every `stride` steps, offsets 0..T inclusive.
/// Past the end of a demo the window holds the final state and zero action.
inline std::vector<Vector> demonstration_windows(
    const std::vector<Demonstration>& demos, const TrajectoryLayout& layout,
    std::size_t stride = 1) {
  layout.validate();
  require(stride >= 1, "demonstration_windows: stride must be >= 1");
  std::vector<Vector> windows;
  for (const Demonstration& demo : demos) {
    require(demo.states.size() == demo.actions.size() + 1,
            "demonstration_windows: malformed demonstration");
    const std::size_t steps = demo.actions.size();
    for (std::size_t o = 0; o <= steps; o += stride) {
      Vector w(layout.size(), 0.0);
      for (std::size_t t = 0; t < layout.horizon; ++t) {
        const std::size_t k = o + t;
        const Vector& s = demo.states[std::min(k, steps)];
        require(s.size() == layout.state_dim,
                "demonstration_windows: state dimension mismatch");
        std::copy(s.begin(), s.end(), w.begin() + layout.state_offset(t));
        if (k < steps) {
          std::copy(demo.actions[k].begin(), demo.actions[k].end(),
                    w.begin() + layout.action_offset(t));
        }
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

/// E(tau) = -weight * sum_t ||s_t - goal||^2 with its analytic gradient.
inline GuidanceConfig goal_guidance(const TrajectoryLayout& layout,
                                    Vector goal, double weight, double scale) {
  require(goal.size() == layout.state_dim, "goal_guidance: goal dimension");
  GuidanceConfig g;
  g.scale = scale;
  g.energy = EnergyModel([layout, goal, weight](std::span<const double> x) {
    double sq = 0.0;
    for (std::size_t t = 0; t < layout.horizon; ++t) {
      for (std::size_t a = 0; a < layout.state_dim; ++a) {
        const double d = x[layout.state_offset(t) + a] - goal[a];
        sq += d * d;
      }
    }
    return -weight * sq;
  });
  g.gradient = [layout, goal, weight](std::span<const double> x) {
    Vector grad(x.size(), 0.0);
    for (std::size_t t = 0; t < layout.horizon; ++t) {
      for (std::size_t a = 0; a < layout.state_dim; ++a) {
        const std::size_t k = layout.state_offset(t) + a;
        grad[k] = -2.0 * weight * (x[k] - goal[a]);
      }
    }
    return grad;
  };
  return g;
}

/// E(tau) = -J of the plan's actions rolled out through `env` from the
/// observed state; the plan's state slots are ignored.
inline GuidanceConfig rollout_guidance(const Environment& env,
                                       const TrajectoryLayout& layout,
                                       double scale) {
  require(layout.state_dim == env.dynamics.state_dim &&
              layout.action_dim == env.dynamics.control_dim,
          "rollout_guidance: layout does not match the environment");
  GuidanceConfig g;
  g.scale = scale;
  g.energy_at = [env, layout](std::span<const double> observed) {
    return EnergyModel([env, layout, x0 = Vector(observed.begin(), observed.end())](
                           std::span<const double> plan) {
      Vector u(layout.horizon * layout.action_dim);
      for (std::size_t t = 0; t < layout.horizon; ++t) {
        for (std::size_t a = 0; a < layout.action_dim; ++a) {
          u[t * layout.action_dim + a] = plan[layout.action_offset(t) + a];
        }
      }
      const ControlSequence controls(layout.horizon, layout.action_dim,
                                     std::move(u));
      return -rollout(env.dynamics, env.cost, x0, controls).total_cost;
    });
  };
  return g;
}

// ---------------------------------------------------------------------------
// Receding-horizon execution

struct PlanningTask {
  Environment env;
  TrajectoryLayout layout;
  Vector goal;
  double goal_radius = 0.1;
  std::size_t step_cap = 80;
  std::optional<CircleObstacle> obstacle;

  void validate() const {
    layout.validate();
    require(layout.state_dim == env.dynamics.state_dim &&
                layout.action_dim == env.dynamics.control_dim,
            "PlanningTask: layout does not match the environment");
    require(goal.size() == layout.state_dim, "PlanningTask: goal dimension");
    require(env.initial_state.size() == layout.state_dim,
            "PlanningTask: initial state dimension");
    require(goal_radius > 0.0 && step_cap >= 1,
            "PlanningTask: goal radius and step cap must be positive");
    require(!obstacle || layout.state_dim >= 2,
            "PlanningTask: obstacle needs a planar state");
  }
};

/// Closest distance from the obstacle center to the segment a-b, compared
/// against the radius.
inline bool segment_penetrates(const CircleObstacle& obstacle,
                               std::span<const double> a,
                               std::span<const double> b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double s = 0.0;
  if (len2 > 0.0) {
    s = ((obstacle.center[0] - a[0]) * dx + (obstacle.center[1] - a[1]) * dy) /
        len2;
    s = std::clamp(s, 0.0, 1.0);
  }
  const double p[] = {a[0] + s * dx, a[1] + s * dy};
  return obstacle.contains(p);
}

struct EpisodeLog {
  std::size_t episode = 0;
  bool success = false;     // reached the goal radius without penetration
  bool reached_goal = false;
  std::size_t steps = 0;
  std::size_t collisions = 0;  // executed segments entering the obstacle
  double total_cost = 0.0;
  double final_goal_distance = 0.0;
  std::vector<Vector> states;
  std::vector<Vector> actions;
  Vector first_plan;
};

inline double goal_distance(const PlanningTask& task,
                            std::span<const double> x) {
  double sq = 0.0;
  for (std::size_t a = 0; a < task.goal.size(); ++a) {
    sq += (x[a] - task.goal[a]) * (x[a] - task.goal[a]);
  }
  return std::sqrt(sq);
}

inline EpisodeLog run_episode(const PlanningTask& task,
                              const KdeDataModel& prior,
                              const NoiseSchedule& schedule,
                              const GuidanceConfig& guidance,
                              std::size_t episode, RunSeed seed) {
  EpisodeLog log;
  log.episode = episode;
  CounterRng rng(seed, 0);
  CounterRng process(substream(seed, 1), 0);
  Vector x = task.env.initial_state;
  log.states.push_back(x);
  while (log.steps < task.step_cap) {
    const TrajectoryPlan plan =
        plan_trajectory(prior, schedule, task.layout, guidance, x, rng);
    if (log.steps == 0) log.first_plan = plan.values;
    const auto first = std::span<const double>(plan.values)
                           .subspan(task.layout.action_offset(0),
                                    task.layout.action_dim);
    Vector action(first.begin(), first.end());
    log.total_cost += task.env.cost.running(x, action);
    Vector next = task.env.dynamics.step(x, action);
    if (task.env.dynamics.process_noise > 0.0) {
      for (double& v : next) v += task.env.dynamics.process_noise * process.normal();
    }
    if (task.obstacle && segment_penetrates(*task.obstacle, x, next)) {
      ++log.collisions;
    }
    x = std::move(next);
    log.actions.push_back(std::move(action));
    log.states.push_back(x);
    ++log.steps;
    if (goal_distance(task, x) <= task.goal_radius) {
      log.reached_goal = true;
      break;
    }
  }
  log.total_cost += task.env.cost.terminal(x);
  log.final_goal_distance = goal_distance(task, x);
  log.success = log.reached_goal && log.collisions == 0;
  return log;
}

/// Episodes run independently on substreams of `seed`; step-cap exhaustion
/// is a failed episode, not an error.
inline std::vector<EpisodeLog> plan_and_execute(const PlanningTask& task,
                                                const KdeDataModel& prior,
                                                const NoiseSchedule& schedule,
                                                const GuidanceConfig& guidance,
                                                std::size_t episodes,
                                                RunSeed seed) {
  task.validate();
  guidance.validate();
  require(prior.dim() == task.layout.size(),
          "plan_and_execute: prior dimension does not match the layout");
  std::vector<EpisodeLog> logs(episodes);
  parallel_for(episodes, [&](std::size_t e) {
    logs[e] = run_episode(task, prior, schedule, guidance, e, substream(seed, e));
  });
  return logs;
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_PLANNER_HPP_
