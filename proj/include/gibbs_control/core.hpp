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

// Shared domain types, seeded randomness and stable exponential averaging.

#ifndef GIBBS_CONTROL_CORE_HPP_
#define GIBBS_CONTROL_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace gibbs {

using Vector = std::vector<double>;

// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// ControlSequence

/// A horizon of T control vectors, each of dimension m, stored step-major.
class ControlSequence {
 public:
  ControlSequence() = default;

  ControlSequence(std::size_t horizon, std::size_t dim, double fill = 0.0)
      : horizon_(horizon), dim_(dim), values_(horizon * dim, fill) {
    require(horizon >= 1 && dim >= 1,
            "ControlSequence: horizon and dimension must be positive");
    require(std::isfinite(fill), "ControlSequence: non-finite fill value");
  }

  ControlSequence(std::size_t horizon, std::size_t dim, Vector values)
      : horizon_(horizon), dim_(dim), values_(std::move(values)) {
    require(horizon >= 1 && dim >= 1,
            "ControlSequence: horizon and dimension must be positive");
    require(values_.size() == horizon * dim,
            "ControlSequence: value count does not match horizon * dim");
    require(all_finite(values_), "ControlSequence: non-finite control entry");
  }

  std::size_t horizon() const { return horizon_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const double> step(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * dim_, dim_);
  }
  std::span<double> step(std::size_t t) {
    return std::span<double>(values_).subspan(t * dim_, dim_);
  }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool operator==(const ControlSequence&) const = default;

 private:
  std::size_t horizon_ = 0;
  std::size_t dim_ = 0;
  Vector values_;
};

// ---------------------------------------------------------------------------
// NoiseKernel

/// Gaussian smoothing/sampling kernel: a diagonal per-step covariance and the
/// temperature. The sequence-level covariance is this block repeated T times.
class NoiseKernel {
 public:
  NoiseKernel(Vector variances, double temperature)
      : variances_(std::move(variances)), temperature_(temperature) {
    require(!variances_.empty(), "NoiseKernel: empty covariance");
    for (double v : variances_) {
      require(std::isfinite(v) && v > 0.0,
              "NoiseKernel: covariance must be positive-definite");
    }
    require(std::isfinite(temperature_) && temperature_ > 0.0,
            "NoiseKernel: temperature must be positive");
  }

  static NoiseKernel isotropic(std::size_t dim, double variance,
                               double temperature) {
    return NoiseKernel(Vector(dim, variance), temperature);
  }

  std::size_t dim() const { return variances_.size(); }
  std::span<const double> variances() const { return variances_; }
  double variance(std::size_t j) const { return variances_[j]; }
  double temperature() const { return temperature_; }

  // Diagonal entry of the sequence-level covariance at flat index i.
  double sequence_variance(std::size_t i) const {
    return variances_[i % variances_.size()];
  }

 private:
  Vector variances_;
  double temperature_;
};

// ---------------------------------------------------------------------------
// EnergyModel

/// E(U) = -J(U) = R(U) = log p~(U) evaluated on a flat control vector.
/// Implementations must be pure; batches evaluate them concurrently.
class EnergyModel {
 public:
  using Function = std::function<double(std::span<const double>)>;

  EnergyModel() = default;
  explicit EnergyModel(Function fn) : fn_(std::move(fn)) {}

  double operator()(std::span<const double> u) const { return fn_(u); }
  double operator()(const ControlSequence& u) const { return fn_(u.values()); }

  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  Function fn_;
};

/// p(U) = exp(E(U) / tau) / Z. The normalizer is filled in on demand by a
/// quadrature routine; the unnormalized log-density is always available.
struct GibbsMeasure {
  EnergyModel energy;
  double temperature = 1.0;
  std::optional<double> log_normalizer;

  double log_unnormalized(std::span<const double> u) const {
    return energy(u) / temperature;
  }

  double log_density(std::span<const double> u) const {
    require(log_normalizer.has_value(),
            "GibbsMeasure: normalizer has not been computed");
    return log_unnormalized(u) - *log_normalizer;
  }
};

// ---------------------------------------------------------------------------
// Seeded counter-based randomness

struct RunSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random draws addressed by (seed, stream, sample, draw index). Every value
/// depends only on its address, so results do not depend on which thread or
/// in which order samples are generated.
class CounterRng {
 public:
  CounterRng(RunSeed seed, std::uint64_t sample)
      : key_(splitmix64(splitmix64(splitmix64(seed.seed) ^ seed.stream) ^
                        (sample * 0xd1b54a32d192ed03ULL))) {}

  // Uniform on (0, 1].
  double uniform() {
    const std::uint64_t bits = splitmix64(key_ ^ splitmix64(counter_++));
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal by Box-Muller; consumes two uniforms per draw.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
           n;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Independent child stream k of a seed, for nested loops that each need
// their own randomness.
inline RunSeed substream(RunSeed parent, std::uint64_t k) {
  return {parent.seed,
          splitmix64(parent.stream ^ (0x632be59bd9b4e019ULL * (k + 1)))};
}

// ---------------------------------------------------------------------------
// Parallelism

// Worker count, capped by GIBBS_CONTROL_THREADS when set.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GIBBS_CONTROL_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

/// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
/// write results into index-addressed slots so output order is fixed.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Stable exponential averaging

/// log sum_k exp(v_k), shifted by the maximum.
inline double log_sum_exp(std::span<const double> values) {
  require(!values.empty(), "log_sum_exp: empty input");
  const double max = *std::max_element(values.begin(), values.end());
  if (max == -std::numeric_limits<double>::infinity()) return max;
  require(std::isfinite(max), "log_sum_exp: non-finite input");
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

/// w_i = exp(E_i / tau) / sum_j exp(E_j / tau).
inline Vector softmax_weights(std::span<const double> energies,
                              double temperature) {
  require(!energies.empty(), "softmax_weights: empty input");
  require(std::isfinite(temperature) && temperature > 0.0,
          "softmax_weights: temperature must be positive");
  Vector scaled(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    require(!std::isnan(energies[i]) &&
                energies[i] != std::numeric_limits<double>::infinity(),
            "softmax_weights: energy is NaN or +inf");
    scaled[i] = energies[i] / temperature;
  }
  const double lse = log_sum_exp(scaled);
  require(std::isfinite(lse), "softmax_weights: every energy is -inf");
  for (double& s : scaled) s = std::exp(s - lse);
  return scaled;
}

inline double effective_sample_size(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

// ---------------------------------------------------------------------------
// PerturbationBatch

/// N perturbation sequences E_i shaped like a ControlSequence, with the
/// energies E(U + E_i) and softmax weights filled in by the update that uses
/// them.
class PerturbationBatch {
 public:
  PerturbationBatch(std::size_t samples, std::size_t horizon, std::size_t dim)
      : samples_(samples),
        horizon_(horizon),
        dim_(dim),
        perturbations_(samples * horizon * dim, 0.0) {
    require(samples >= 1, "PerturbationBatch: need at least one sample");
    require(horizon >= 1 && dim >= 1, "PerturbationBatch: empty shape");
  }

  // Batch from explicit perturbation sequences.
  static PerturbationBatch from_sequences(
      const std::vector<ControlSequence>& sequences) {
    require(!sequences.empty(), "PerturbationBatch: empty sequence list");
    PerturbationBatch batch(sequences.size(), sequences.front().horizon(),
                            sequences.front().dim());
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      require(sequences[i].horizon() == batch.horizon_ &&
                  sequences[i].dim() == batch.dim_,
              "PerturbationBatch: inconsistent sequence shapes");
      std::copy(sequences[i].values().begin(), sequences[i].values().end(),
                batch.perturbation(i).begin());
    }
    return batch;
  }

  std::size_t samples() const { return samples_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t dim() const { return dim_; }
  std::size_t sequence_size() const { return horizon_ * dim_; }

  std::span<const double> perturbation(std::size_t i) const {
    return std::span<const double>(perturbations_)
        .subspan(i * sequence_size(), sequence_size());
  }
  std::span<double> perturbation(std::size_t i) {
    return std::span<double>(perturbations_)
        .subspan(i * sequence_size(), sequence_size());
  }

  bool matches(const ControlSequence& u) const {
    return u.horizon() == horizon_ && u.dim() == dim_;
  }

  const Vector& energies() const { return energies_; }
  const Vector& weights() const { return weights_; }

  void set_energies(Vector energies) {
    require(energies.size() == samples_, "PerturbationBatch: energy count");
    energies_ = std::move(energies);
  }
  void set_weights(Vector weights) {
    require(weights.size() == samples_, "PerturbationBatch: weight count");
    weights_ = std::move(weights);
  }

  // sum_i w_i E_i.
  Vector weighted_mean(std::span<const double> weights) const {
    require(weights.size() == samples_, "weighted_mean: weight count");
    Vector out(sequence_size(), 0.0);
    for (std::size_t i = 0; i < samples_; ++i) {
      const auto e = perturbation(i);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights[i] * e[k];
    }
    return out;
  }

 private:
  std::size_t samples_;
  std::size_t horizon_;
  std::size_t dim_;
  Vector perturbations_;
  Vector energies_;
  Vector weights_;
};

/// Draws N independent perturbation sequences, each step from N(0, Sigma).
/// Sample i uses its own stream, so adding samples never changes earlier ones.
inline PerturbationBatch sample_perturbations(const NoiseKernel& kernel,
                                              std::size_t horizon,
                                              std::size_t samples,
                                              RunSeed seed) {
  require(horizon >= 1, "sample_perturbations: horizon must be >= 1");
  require(samples >= 1, "sample_perturbations: samples must be >= 1");
  PerturbationBatch batch(samples, horizon, kernel.dim());
  Vector stddev(kernel.dim());
  for (std::size_t j = 0; j < kernel.dim(); ++j) {
    stddev[j] = std::sqrt(kernel.variance(j));
  }
  parallel_for(samples, [&](std::size_t i) {
    CounterRng rng(seed, i);
    auto e = batch.perturbation(i);
    for (std::size_t k = 0; k < e.size(); ++k) {
      e[k] = stddev[k % stddev.size()] * rng.normal();
    }
  });
  return batch;
}

/// E(U + E_i) for every sample, ordered by sample index.
inline Vector evaluate_perturbed(const EnergyModel& energy,
                                 std::span<const double> u,
                                 const PerturbationBatch& batch) {
  require(u.size() == batch.sequence_size(),
          "evaluate_perturbed: control/perturbation shape mismatch");
  Vector energies(batch.samples());
  parallel_for(batch.samples(), [&](std::size_t i) {
    Vector perturbed(u.begin(), u.end());
    const auto e = batch.perturbation(i);
    for (std::size_t k = 0; k < perturbed.size(); ++k) perturbed[k] += e[k];
    energies[i] = energy(perturbed);
  });
  return energies;
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_CORE_HPP_
