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

// Score-function gradient estimators for an open-loop Gaussian policy
// a_t ~ N(u_t, Sigma) rolled out from a fixed initial state.
//
//   vanilla:      g_t = Sigma^-1 (1/N) sum_i eps_{t,i} R(U + E_i)
//   exponential:  g_t = Sigma^-1 (1/N) sum_i eps_{t,i} exp(R(U + E_i) / tau)
//
// Multiplying the exponential estimate by Sigma and by N / sum_i exp(R_i/tau)
// gives the MPPI step on the same batch, exactly.

#ifndef GIBBS_CONTROL_POLICYGRAD_HPP_
#define GIBBS_CONTROL_POLICYGRAD_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

#include "gibbs_control/core.hpp"
#include "gibbs_control/mppi.hpp"

namespace gibbs {

/// Means u_t (one per step) and a theta-independent covariance.
struct GaussianOpenLoopPolicy {
  ControlSequence means;
  NoiseKernel kernel;

  GaussianOpenLoopPolicy(ControlSequence mu, NoiseKernel k)
      : means(std::move(mu)), kernel(std::move(k)) {
    require(means.dim() == kernel.dim(),
            "GaussianOpenLoopPolicy: mean dimension does not match covariance");
  }

  double temperature() const { return kernel.temperature(); }
};

/// log N(a; u_t, Sigma).
inline double log_policy_density(const GaussianOpenLoopPolicy& policy,
                                 std::span<const double> action,
                                 std::size_t t) {
  require(t < policy.means.horizon(), "log_policy_density: step out of range");
  require(action.size() == policy.kernel.dim(),
          "log_policy_density: action dimension mismatch");
  const auto mu = policy.means.step(t);
  const double d = static_cast<double>(action.size());
  double log_det = 0.0;
  double quad = 0.0;
  for (std::size_t j = 0; j < action.size(); ++j) {
    const double var = policy.kernel.variance(j);
    log_det += std::log(var);
    const double diff = action[j] - mu[j];
    quad += diff * diff / var;
  }
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det -
         0.5 * quad;
}

struct PgEstimate {
  ControlSequence gradient;
  Vector returns;  // R(U + E_i), ordered by sample
};

/// Exponential-objective estimate stored as exp(log_scale) * scaled_gradient,
/// with log_scale = max_i R_i / tau so the scaled part cannot overflow.
struct ExpPgEstimate {
  ControlSequence scaled_gradient;
  double log_scale = 0.0;
  Vector returns;

  ControlSequence gradient() const {
    ControlSequence g = scaled_gradient;
    const double s = std::exp(log_scale);
    for (double& v : g.values()) v *= s;
    return g;
  }
};

namespace detail {

inline ControlSequence score_weighted_mean(const GaussianOpenLoopPolicy& policy,
                                           const PerturbationBatch& batch,
                                           std::span<const double> weights) {
  const Vector mean = batch.weighted_mean(weights);
  Vector g(mean.size());
  const double n = static_cast<double>(batch.samples());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] = mean[k] / (n * policy.kernel.sequence_variance(k));
  }
  return ControlSequence(policy.means.horizon(), policy.means.dim(),
                         std::move(g));
}

}  // namespace detail

inline PgEstimate pg_estimate_on_batch(const GaussianOpenLoopPolicy& policy,
                                       const EnergyModel& energy,
                                       const PerturbationBatch& batch) {
  require(batch.matches(policy.means), "pg_estimate: batch shape mismatch");
  Vector returns = evaluate_perturbed(energy, policy.means.values(), batch);
  ControlSequence g = detail::score_weighted_mean(policy, batch, returns);
  return {std::move(g), std::move(returns)};
}

inline PgEstimate pg_estimate(const GaussianOpenLoopPolicy& policy,
                              const EnergyModel& energy, std::size_t samples,
                              RunSeed seed) {
  require(samples >= 1, "pg_estimate: samples must be >= 1");
  const PerturbationBatch batch = sample_perturbations(
      policy.kernel, policy.means.horizon(), samples, seed);
  return pg_estimate_on_batch(policy, energy, batch);
}

inline ExpPgEstimate pg_exp_estimate_on_batch(
    const GaussianOpenLoopPolicy& policy, const EnergyModel& energy,
    const PerturbationBatch& batch) {
  require(batch.matches(policy.means), "pg_exp_estimate: batch shape mismatch");
  Vector returns = evaluate_perturbed(energy, policy.means.values(), batch);
  const double tau = policy.temperature();
  double log_scale = -std::numeric_limits<double>::infinity();
  for (double r : returns) log_scale = std::max(log_scale, r / tau);
  require(std::isfinite(log_scale), "pg_exp_estimate: no finite return");
  Vector factors(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) {
    factors[i] = std::exp(returns[i] / tau - log_scale);
  }
  ControlSequence g = detail::score_weighted_mean(policy, batch, factors);
  return {std::move(g), log_scale, std::move(returns)};
}

inline ExpPgEstimate pg_exp_estimate(const GaussianOpenLoopPolicy& policy,
                                     const EnergyModel& energy,
                                     std::size_t samples, RunSeed seed) {
  require(samples >= 1, "pg_exp_estimate: samples must be >= 1");
  const PerturbationBatch batch = sample_perturbations(
      policy.kernel, policy.means.horizon(), samples, seed);
  return pg_exp_estimate_on_batch(policy, energy, batch);
}

struct PgIdentityReport {
  Vector mppi_direction;       // sum_i w_i E_i
  Vector reconstructed;        // Sigma * g_exp * N / sum_i exp(R_i / tau)
  Vector vanilla_reconstructed;  // Sigma * g * N / sum_i R_i
  double relative_residual = 0.0;
  double vanilla_relative_residual = 0.0;
  bool holds = false;
};

namespace detail {

inline double relative_difference(std::span<const double> a,
                                  std::span<const double> b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    norm += b[k] * b[k];
  }
  if (norm == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / norm);
}

}  // namespace detail

/// Feeds one batch to both the exponential PG estimator and the MPPI update
/// and reports how far the normalizer-rescaled PG estimate is from the MPPI
/// direction. The vanilla estimator, rescaled by sum_i R_i, is the negative
/// control.
inline PgIdentityReport check_pg_mppi_identity(
    const GaussianOpenLoopPolicy& policy, const EnergyModel& energy,
    const PerturbationBatch& batch, double tolerance = 1e-10) {
  require(batch.samples() >= 1, "check_pg_mppi_identity: empty batch");
  require(batch.matches(policy.means),
          "check_pg_mppi_identity: batch shape mismatch");
  PgIdentityReport report;
  const double tau = policy.temperature();
  const double n = static_cast<double>(batch.samples());

  PerturbationBatch mppi_batch = batch;
  const ControlSequence next =
      mppi_update_on_batch(policy.means, energy, tau, mppi_batch);
  report.mppi_direction.resize(next.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    report.mppi_direction[k] = next[k] - policy.means[k];
  }

  const ExpPgEstimate exp_pg = pg_exp_estimate_on_batch(policy, energy, batch);
  double scaled_sum = 0.0;
  for (double r : exp_pg.returns) scaled_sum += std::exp(r / tau - exp_pg.log_scale);
  report.reconstructed.resize(next.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    report.reconstructed[k] = policy.kernel.sequence_variance(k) *
                              exp_pg.scaled_gradient[k] * n / scaled_sum;
  }

  const PgEstimate pg = pg_estimate_on_batch(policy, energy, batch);
  double return_sum = 0.0;
  for (double r : pg.returns) return_sum += r;
  report.vanilla_reconstructed.resize(next.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    report.vanilla_reconstructed[k] = policy.kernel.sequence_variance(k) *
                                      pg.gradient[k] * n / return_sum;
  }

  report.relative_residual =
      detail::relative_difference(report.reconstructed, report.mppi_direction);
  report.vanilla_relative_residual = detail::relative_difference(
      report.vanilla_reconstructed, report.mppi_direction);
  report.holds = report.relative_residual <= tolerance;
  return report;
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_POLICYGRAD_HPP_
