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

// Model predictive path integral control.
//
//   U' = U + sum_i w_i E_i,   w = softmax(E(U + E_i) / tau)
//
// The regularized variants subtract sum_t (u_t - u~_t)^T Sigma^-1 eps_{t,i}
// from each exponent; u~ = 0 is the zero-mean control prior and u~ = U makes
// the term vanish.

#ifndef GIBBS_CONTROL_MPPI_HPP_
#define GIBBS_CONTROL_MPPI_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/envs.hpp"

namespace gibbs {

// Every rollout in a batch reported E = -inf.
class DegenerateBatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MppiConfig {
  NoiseKernel kernel = NoiseKernel::isotropic(1, 1.0, 1.0);
  std::size_t samples = 1024;
  std::size_t horizon = 50;
  std::size_t iterations = 1;
  std::optional<ControlSequence> nominal;

  void validate() const {
    require(samples >= 1, "MppiConfig: samples must be >= 1");
    require(horizon >= 1, "MppiConfig: horizon must be >= 1");
    require(iterations >= 1, "MppiConfig: iterations must be >= 1");
    if (nominal) {
      require(nominal->horizon() == horizon && nominal->dim() == kernel.dim(),
              "MppiConfig: nominal controls do not match horizon/kernel");
    }
  }
};

struct MppiResult {
  ControlSequence controls;
  PerturbationBatch batch;
};

struct BatchDiagnostics {
  double effective_sample_size = 0.0;
  double max_weight = 0.0;
  double best_energy = -std::numeric_limits<double>::infinity();
  // All mass on one sample (weights underflowed); allowed, but flagged.
  bool degenerate = false;
};

inline BatchDiagnostics diagnose(const PerturbationBatch& batch) {
  BatchDiagnostics d;
  const auto& w = batch.weights();
  const auto& e = batch.energies();
  if (!w.empty()) {
    d.effective_sample_size = effective_sample_size(w);
    d.max_weight = *std::max_element(w.begin(), w.end());
    d.degenerate = batch.samples() > 1 && d.max_weight == 1.0;
  }
  if (!e.empty()) d.best_energy = *std::max_element(e.begin(), e.end());
  return d;
}

namespace detail {

inline void check_not_all_invalid(const Vector& energies) {
  const bool all_invalid =
      std::all_of(energies.begin(), energies.end(), [](double e) {
        return e == -std::numeric_limits<double>::infinity();
      });
  if (all_invalid) {
    throw DegenerateBatch("MPPI batch degenerate: every rollout has E = -inf");
  }
}

inline ControlSequence apply_weights(const ControlSequence& u,
                                     PerturbationBatch& batch,
                                     Vector weights) {
  const Vector step = batch.weighted_mean(weights);
  batch.set_weights(std::move(weights));
  Vector next(u.values().begin(), u.values().end());
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += step[k];
  return ControlSequence(u.horizon(), u.dim(), std::move(next));
}

}  // namespace detail

/// One MPPI step on a caller-supplied batch. Fills the batch's energies and
/// weights.
inline ControlSequence mppi_update_on_batch(const ControlSequence& u,
                                            const EnergyModel& energy,
                                            double temperature,
                                            PerturbationBatch& batch) {
  require(batch.matches(u), "mppi_update: batch shape does not match U");
  require(temperature > 0.0, "mppi_update: temperature must be positive");
  Vector energies = evaluate_perturbed(energy, u.values(), batch);
  detail::check_not_all_invalid(energies);
  Vector weights = softmax_weights(energies, temperature);
  batch.set_energies(std::move(energies));
  return detail::apply_weights(u, batch, std::move(weights));
}

inline MppiResult mppi_update(const ControlSequence& u,
                              const EnergyModel& energy, const MppiConfig& cfg,
                              RunSeed seed) {
  cfg.validate();
  require(u.dim() == cfg.kernel.dim(),
          "mppi_update: control dimension does not match kernel");
  PerturbationBatch batch =
      sample_perturbations(cfg.kernel, u.horizon(), cfg.samples, seed);
  ControlSequence next =
      mppi_update_on_batch(u, energy, cfg.kernel.temperature(), batch);
  return {std::move(next), std::move(batch)};
}

/// sum_t (u_t - u~_t)^T Sigma^-1 eps_{t,i} for each sample i.
inline Vector prior_inner_products(const ControlSequence& u,
                                   const ControlSequence& nominal,
                                   const NoiseKernel& kernel,
                                   const PerturbationBatch& batch) {
  require(nominal.horizon() == u.horizon() && nominal.dim() == u.dim(),
          "regularizer: nominal controls do not match U");
  Vector scaled_offset(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    scaled_offset[k] = (u[k] - nominal[k]) / kernel.sequence_variance(k);
  }
  Vector out(batch.samples(), 0.0);
  for (std::size_t i = 0; i < batch.samples(); ++i) {
    const auto e = batch.perturbation(i);
    double dot = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) dot += scaled_offset[k] * e[k];
    out[i] = dot;
  }
  return out;
}

/// Prior-regularized step on a caller-supplied batch. The exponent is
/// E(U + E_i)/tau minus the unscaled prior inner product.
inline ControlSequence mppi_update_regularized_on_batch(
    const ControlSequence& u, const EnergyModel& energy,
    const NoiseKernel& kernel, const ControlSequence& nominal,
    PerturbationBatch& batch) {
  require(batch.matches(u), "mppi_update: batch shape does not match U");
  require(u.dim() == kernel.dim(),
          "mppi_update: control dimension does not match kernel");
  Vector energies = evaluate_perturbed(energy, u.values(), batch);
  detail::check_not_all_invalid(energies);
  const Vector prior = prior_inner_products(u, nominal, kernel, batch);
  Vector exponents(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    exponents[i] = energies[i] / kernel.temperature() - prior[i];
  }
  Vector weights = softmax_weights(exponents, 1.0);
  batch.set_energies(std::move(energies));
  return detail::apply_weights(u, batch, std::move(weights));
}

inline MppiResult mppi_update_regularized(const ControlSequence& u,
                                          const EnergyModel& energy,
                                          const MppiConfig& cfg,
                                          RunSeed seed) {
  cfg.validate();
  require(u.dim() == cfg.kernel.dim(),
          "mppi_update: control dimension does not match kernel");
  const ControlSequence nominal =
      cfg.nominal ? *cfg.nominal : ControlSequence(u.horizon(), u.dim(), 0.0);
  PerturbationBatch batch =
      sample_perturbations(cfg.kernel, u.horizon(), cfg.samples, seed);
  ControlSequence next =
      mppi_update_regularized_on_batch(u, energy, cfg.kernel, nominal, batch);
  return {std::move(next), std::move(batch)};
}

// ---------------------------------------------------------------------------
// Receding horizon

enum class MppiVariant { kVanilla, kRegularized };

struct MppiIterationRecord {
  std::size_t step = 0;
  std::size_t iteration = 0;
  BatchDiagnostics diagnostics;
  double plan_cost = 0.0;  // J of the updated plan from the current state
};

struct ControlLoopResult {
  std::vector<Trajectory> plans;  // plan after the updates at each step
  Trajectory executed;            // states visited and controls applied
  std::vector<MppiIterationRecord> log;
};

/// Per environment step: `iterations` MPPI updates from the current state,
/// execute u_0, shift the plan left and zero-fill the tail.
inline ControlLoopResult mppi_control_loop(
    const DynamicsModel& dynamics, const CostModel& cost,
    std::span<const double> x0, const MppiConfig& cfg, std::size_t steps,
    RunSeed seed, MppiVariant variant = MppiVariant::kVanilla) {
  cfg.validate();
  require(steps >= 1, "mppi_control_loop: steps must be >= 1");
  require(cfg.kernel.dim() == dynamics.control_dim,
          "mppi_control_loop: kernel dimension does not match controls");

  ControlLoopResult result;
  ControlSequence plan(cfg.horizon, dynamics.control_dim, 0.0);
  Vector state(x0.begin(), x0.end());
  std::vector<Vector> visited{state};
  Vector applied;
  double executed_cost = 0.0;
  std::optional<CounterRng> noise;
  if (dynamics.process_noise > 0.0) noise.emplace(substream(seed, ~0ULL), 0);

  for (std::size_t s = 0; s < steps; ++s) {
    const EnergyModel energy = energy_of(dynamics, cost, state);
    const RunSeed step_seed = substream(seed, s);
    for (std::size_t k = 0; k < cfg.iterations; ++k) {
      const RunSeed it_seed = substream(step_seed, k);
      MppiResult r = variant == MppiVariant::kVanilla
                         ? mppi_update(plan, energy, cfg, it_seed)
                         : mppi_update_regularized(plan, energy, cfg, it_seed);
      plan = std::move(r.controls);
      MppiIterationRecord rec;
      rec.step = s;
      rec.iteration = k;
      rec.diagnostics = diagnose(r.batch);
      rec.plan_cost = -energy(plan);
      result.log.push_back(rec);
    }
    result.plans.push_back(rollout(dynamics, cost, state, plan));

    const auto u0 = plan.step(0);
    executed_cost += cost.running(state, u0);
    applied.insert(applied.end(), u0.begin(), u0.end());
    state = dynamics.step(state, u0);
    if (noise) {
      for (double& v : state) v += dynamics.process_noise * noise->normal();
    }
    visited.push_back(state);

    auto values = plan.values();
    const std::size_t m = plan.dim();
    std::copy(values.begin() + m, values.end(), values.begin());
    std::fill(values.end() - m, values.end(), 0.0);
  }
  executed_cost += cost.terminal(state);
  result.executed.states = std::move(visited);
  result.executed.controls =
      ControlSequence(steps, dynamics.control_dim, std::move(applied));
  result.executed.total_cost = executed_cost;
  return result;
}

inline ControlLoopResult mppi_control_loop(
    const Environment& env, std::span<const double> x0, const MppiConfig& cfg,
    std::size_t steps, RunSeed seed,
    MppiVariant variant = MppiVariant::kVanilla) {
  return mppi_control_loop(env.dynamics, env.cost, x0, cfg, steps, seed,
                           variant);
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_MPPI_HPP_
