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

// Discrete diffusion over flat vectors x (for planning, x is a trajectory).
//
// Forward kernels at step i = 1..N:
//   VE: p_i(x | x0) = N(x; x0, sigma_i^2 I)
//   VP: p_i(x | x0) = N(x; sqrt(abar_i) x0, (1 - abar_i) I),
//       abar_i = prod_{j <= i} (1 - beta_j)
//
// The data distribution is a Gaussian KDE over a finite point set, so every
// marginal p_i is a finite Gaussian mixture and its score is exact. Reverse
// samplers step x_{i+1} -> x_i with one of four updates:
//   VE ancestral:  x + (s2_{i+1} - s2_i) score + sqrt(s2_i (s2_{i+1} - s2_i) / s2_{i+1}) z
//   VE reverse:    x + (s2_{i+1} - s2_i) score + sqrt(s2_{i+1} - s2_i) z
//   VP ancestral:  (x + b score) / sqrt(1 - b) + sqrt(b) z
//   VP reverse:    (2 - sqrt(1 - b)) x + b score + sqrt(b) z
// with s2_i = sigma_i^2, sigma_0 = 0 and b = beta_{i+1}.

#ifndef GIBBS_CONTROL_DIFFUSION_HPP_
#define GIBBS_CONTROL_DIFFUSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/smoothed.hpp"

namespace gibbs {

enum class DiffusionKind { kVE, kVP };

inline const char* to_string(DiffusionKind kind) {
  return kind == DiffusionKind::kVE ? "ve" : "vp";
}

class NoiseSchedule {
 public:
  /// sigma_1 < ... < sigma_N, all positive.
  static NoiseSchedule variance_exploding(Vector sigmas) {
    require(!sigmas.empty(), "NoiseSchedule: empty sigma schedule");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      require(std::isfinite(sigmas[i]) && sigmas[i] > 0.0,
              "NoiseSchedule: sigma must be positive");
      require(i == 0 || sigmas[i] > sigmas[i - 1],
              "NoiseSchedule: sigma must be strictly increasing");
    }
    NoiseSchedule s;
    s.kind_ = DiffusionKind::kVE;
    s.sigmas_.reserve(sigmas.size() + 1);
    s.sigmas_.push_back(0.0);
    s.sigmas_.insert(s.sigmas_.end(), sigmas.begin(), sigmas.end());
    return s;
  }

  /// beta_1..beta_N in [0, 1). beta = 0 is allowed so the identity process
  /// can be expressed.
  static NoiseSchedule variance_preserving(Vector betas) {
    require(!betas.empty(), "NoiseSchedule: empty beta schedule");
    NoiseSchedule s;
    s.kind_ = DiffusionKind::kVP;
    s.betas_.reserve(betas.size() + 1);
    s.betas_.push_back(0.0);
    s.alpha_bars_.push_back(1.0);
    for (double b : betas) {
      require(std::isfinite(b) && b >= 0.0 && b < 1.0,
              "NoiseSchedule: beta must lie in [0, 1)");
      s.betas_.push_back(b);
      s.alpha_bars_.push_back(s.alpha_bars_.back() * (1.0 - b));
    }
    return s;
  }

  static NoiseSchedule ve_geometric(double sigma_min, double sigma_max,
                                    std::size_t steps) {
    require(steps >= 2 && sigma_min > 0.0 && sigma_max > sigma_min,
            "NoiseSchedule: invalid geometric VE parameters");
    Vector sigmas(steps);
    const double ratio = std::log(sigma_max / sigma_min);
    for (std::size_t i = 0; i < steps; ++i) {
      sigmas[i] = sigma_min * std::exp(ratio * static_cast<double>(i) /
                                       static_cast<double>(steps - 1));
    }
    return variance_exploding(std::move(sigmas));
  }

  static NoiseSchedule vp_linear(double beta_min, double beta_max,
                                 std::size_t steps) {
    require(steps >= 2 && beta_min >= 0.0 && beta_max >= beta_min &&
                beta_max < 1.0,
            "NoiseSchedule: invalid linear VP parameters");
    Vector betas(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      betas[i] = beta_min + (beta_max - beta_min) * static_cast<double>(i) /
                                static_cast<double>(steps - 1);
    }
    return variance_preserving(std::move(betas));
  }

  DiffusionKind kind() const { return kind_; }
  std::size_t steps() const {
    return kind_ == DiffusionKind::kVE ? sigmas_.size() - 1 : betas_.size() - 1;
  }

  // Index 0 is the data itself: sigma_0 = 0, abar_0 = 1.
  double sigma(std::size_t i) const { return sigmas_.at(i); }
  double beta(std::size_t i) const { return betas_.at(i); }
  double alpha_bar(std::size_t i) const { return alpha_bars_.at(i); }

  // Factor applied to x0 by the kernel at step i.
  double mean_scale(std::size_t i) const {
    return kind_ == DiffusionKind::kVE ? 1.0 : std::sqrt(alpha_bar(i));
  }
  // Variance of the kernel at step i.
  double kernel_variance(std::size_t i) const {
    return kind_ == DiffusionKind::kVE ? sigma(i) * sigma(i)
                                       : 1.0 - alpha_bar(i);
  }

  // Variance of the sampler's starting distribution.
  double prior_variance() const {
    return kind_ == DiffusionKind::kVE ? sigma(steps()) * sigma(steps()) : 1.0;
  }

  void check_step(std::size_t i) const {
    if (i < 1 || i > steps()) {
      throw ContractViolation("diffusion step " + std::to_string(i) +
                              " outside 1.." + std::to_string(steps()));
    }
  }

 private:
  DiffusionKind kind_ = DiffusionKind::kVE;
  Vector sigmas_;
  Vector betas_;
  Vector alpha_bars_;
};

struct KernelParams {
  Vector mean;
  double variance = 0.0;
};

/// Mean and (isotropic) variance of p_i(x | x0).
inline KernelParams perturbation_kernel_params(const NoiseSchedule& schedule,
                                               std::size_t i,
                                               std::span<const double> x0) {
  schedule.check_step(i);
  KernelParams k;
  const double scale = schedule.mean_scale(i);
  k.mean.resize(x0.size());
  for (std::size_t a = 0; a < x0.size(); ++a) k.mean[a] = scale * x0[a];
  k.variance = schedule.kernel_variance(i);
  return k;
}

// ---------------------------------------------------------------------------
// KDE data model and its exact scores

/// p_data(x0) = (1/K) sum_k N(x0; x_k, h^2 I).
struct KdeDataModel {
  std::vector<Vector> points;
  double bandwidth = 0.0;

  KdeDataModel() = default;
  KdeDataModel(std::vector<Vector> pts, double h)
      : points(std::move(pts)), bandwidth(h) {
    validate();
  }

  static KdeDataModel scalar(const Vector& xs, double h) {
    std::vector<Vector> pts;
    for (double x : xs) pts.push_back({x});
    return KdeDataModel(std::move(pts), h);
  }

  std::size_t dim() const { return points.front().size(); }
  std::size_t size() const { return points.size(); }

  void validate() const {
    require(!points.empty(), "KdeDataModel: need at least one data point");
    require(std::isfinite(bandwidth) && bandwidth >= 0.0,
            "KdeDataModel: bandwidth must be finite and nonnegative");
    for (const auto& p : points) {
      require(p.size() == points.front().size() && !p.empty(),
              "KdeDataModel: data points differ in dimension");
      require(all_finite(p), "KdeDataModel: non-finite data point");
    }
  }
};

/// p_i is sum_k (1/K) N(c_k, v I) with c_k = mean_scale * x_k.
struct MixtureMarginal {
  double mean_scale = 1.0;
  double variance = 0.0;
};

inline MixtureMarginal marginal_at(const KdeDataModel& data,
                                   const NoiseSchedule& schedule,
                                   std::size_t i) {
  const double scale = schedule.mean_scale(i);
  const double h2 = data.bandwidth * data.bandwidth;
  MixtureMarginal m{scale, scale * scale * h2 + schedule.kernel_variance(i)};
  require(m.variance > 0.0,
          "diffusion marginal is degenerate (zero variance at this step)");
  return m;
}

namespace detail {

inline Vector mixture_log_terms(const KdeDataModel& data,
                                const MixtureMarginal& m,
                                std::span<const double> x) {
  Vector log_terms(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    double sq = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double d = x[a] - m.mean_scale * data.points[k][a];
      sq += d * d;
    }
    log_terms[k] = -0.5 * sq / m.variance;
  }
  return log_terms;
}

}  // namespace detail

inline double marginal_log_density(const KdeDataModel& data,
                                   const NoiseSchedule& schedule,
                                   std::size_t i, std::span<const double> x) {
  require(x.size() == data.dim(), "marginal_log_density: dimension mismatch");
  const MixtureMarginal m = marginal_at(data, schedule, i);
  const Vector terms = detail::mixture_log_terms(data, m, x);
  const double d = static_cast<double>(x.size());
  return log_sum_exp(terms) - std::log(static_cast<double>(data.size())) -
         0.5 * d * std::log(2.0 * std::numbers::pi * m.variance);
}

/// grad_x log p_i(x) of the mixture marginal.
inline Vector analytic_score(const KdeDataModel& data,
                             const NoiseSchedule& schedule, std::size_t i,
                             std::span<const double> x) {
  require(x.size() == data.dim(), "analytic_score: dimension mismatch");
  const MixtureMarginal m = marginal_at(data, schedule, i);
  const Vector r =
      softmax_weights(detail::mixture_log_terms(data, m, x), 1.0);
  Vector score(x.size(), 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (std::size_t a = 0; a < x.size(); ++a) {
      score[a] += r[k] * (m.mean_scale * data.points[k][a] - x[a]);
    }
  }
  for (double& s : score) s /= m.variance;
  return score;
}

/// A score model s(x, i) tied to one diffusion kind.
struct ScoreFunction {
  DiffusionKind kind = DiffusionKind::kVE;
  std::function<Vector(std::span<const double>, std::size_t)> evaluate;

  Vector operator()(std::span<const double> x, std::size_t i) const {
    return evaluate(x, i);
  }
};

inline ScoreFunction make_analytic_score(KdeDataModel data,
                                         NoiseSchedule schedule) {
  const DiffusionKind kind = schedule.kind();
  return {kind, [data = std::move(data), schedule = std::move(schedule)](
                    std::span<const double> x, std::size_t i) {
            return analytic_score(data, schedule, i, x);
          }};
}

// ---------------------------------------------------------------------------
// Denoising score matching

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo DSM objective at step i:
///   E_{x0 ~ p_data, x~ ~ p_i(.|x0)} || s(x~, i) - grad log p_i(x~ | x0) ||^2
/// with grad log p_i(x~ | x0) = -(x~ - mean_scale x0) / kernel_variance.
inline MonteCarloEstimate dsm_loss(const KdeDataModel& data,
                                   const NoiseSchedule& schedule,
                                   std::size_t i, const ScoreFunction& score,
                                   std::size_t samples, RunSeed seed) {
  schedule.check_step(i);
  require(samples >= 1, "dsm_loss: need at least one sample");
  require(score.kind == schedule.kind(), "dsm_loss: score/schedule kind mismatch");
  const double scale = schedule.mean_scale(i);
  const double var = schedule.kernel_variance(i);
  require(var > 0.0, "dsm_loss: kernel variance is zero at this step");
  const double sd = std::sqrt(var);
  const std::size_t d = data.dim();

  Vector losses(samples);
  parallel_for(samples, [&](std::size_t m) {
    CounterRng rng(seed, m);
    const Vector& anchor = data.points[rng.below(data.size())];
    Vector x0(d), noisy(d), target(d);
    for (std::size_t a = 0; a < d; ++a) {
      x0[a] = anchor[a] + data.bandwidth * rng.normal();
    }
    for (std::size_t a = 0; a < d; ++a) {
      noisy[a] = scale * x0[a] + sd * rng.normal();
      target[a] = -(noisy[a] - scale * x0[a]) / var;
    }
    const Vector s = score(noisy, i);
    double sq = 0.0;
    for (std::size_t a = 0; a < d; ++a) sq += (s[a] - target[a]) * (s[a] - target[a]);
    losses[m] = sq;
  });
  MonteCarloEstimate est;
  for (double l : losses) est.mean += l;
  est.mean /= static_cast<double>(samples);
  double ss = 0.0;
  for (double l : losses) ss += (l - est.mean) * (l - est.mean);
  if (samples > 1) {
    est.standard_error =
        std::sqrt(ss / static_cast<double>(samples - 1) / static_cast<double>(samples));
  }
  return est;
}

// ---------------------------------------------------------------------------
// Reverse samplers

enum class SamplerKind { kAncestral, kReverseDiffusion };

inline const char* to_string(SamplerKind kind) {
  return kind == SamplerKind::kAncestral ? "ancestral" : "reverse";
}

/// Mean and isotropic noise variance of one reverse step x_{i+1} -> x_i,
/// i.e. the update with z = 0 and the variance multiplying z.
struct ReverseStep {
  Vector mean;
  double noise_variance = 0.0;
};

inline ReverseStep reverse_step_moments(const NoiseSchedule& schedule,
                                        SamplerKind sampler, std::size_t from,
                                        std::span<const double> x,
                                        std::span<const double> score) {
  schedule.check_step(from);
  const std::size_t to = from - 1;
  ReverseStep r;
  r.mean.resize(x.size());
  if (schedule.kind() == DiffusionKind::kVE) {
    const double s2_from = schedule.sigma(from) * schedule.sigma(from);
    const double s2_to = schedule.sigma(to) * schedule.sigma(to);
    const double gap = s2_from - s2_to;
    for (std::size_t a = 0; a < x.size(); ++a) r.mean[a] = x[a] + gap * score[a];
    r.noise_variance =
        sampler == SamplerKind::kAncestral ? s2_to * gap / s2_from : gap;
  } else {
    const double b = schedule.beta(from);
    const double root = std::sqrt(1.0 - b);
    for (std::size_t a = 0; a < x.size(); ++a) {
      r.mean[a] = sampler == SamplerKind::kAncestral
                      ? (x[a] + b * score[a]) / root
                      : (2.0 - root) * x[a] + b * score[a];
    }
    r.noise_variance = b;
  }
  return r;
}

/// Samples stored path-major: value(p, a) = values[p * dim + a].
struct SampleSet {
  std::size_t paths = 0;
  std::size_t dim = 0;
  Vector values;

  std::span<const double> path(std::size_t p) const {
    return std::span<const double>(values).subspan(p * dim, dim);
  }

  MonteCarloEstimate moment(std::size_t axis, int power) const {
    MonteCarloEstimate est;
    Vector v(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      v[p] = std::pow(values[p * dim + axis], power);
      est.mean += v[p];
    }
    est.mean /= static_cast<double>(paths);
    double ss = 0.0;
    for (double x : v) ss += (x - est.mean) * (x - est.mean);
    if (paths > 1) {
      est.standard_error = std::sqrt(ss / static_cast<double>(paths - 1) /
                                     static_cast<double>(paths));
    }
    return est;
  }
};

/// Runs the reverse chain from the prior (N(0, sigma_N^2 I) for VE,
/// N(0, I) for VP) down to step 0 for every path.
inline SampleSet reverse_sample(const NoiseSchedule& schedule,
                                const ScoreFunction& score,
                                SamplerKind sampler, std::size_t paths,
                                std::size_t dim, RunSeed seed) {
  require(score.kind == schedule.kind(),
          "reverse_sample: score and schedule kinds differ");
  require(paths >= 1 && dim >= 1, "reverse_sample: empty request");
  SampleSet out{paths, dim, Vector(paths * dim)};
  const double prior_sd = std::sqrt(schedule.prior_variance());
  parallel_for(paths, [&](std::size_t p) {
    CounterRng rng(seed, p);
    Vector x(dim);
    for (double& v : x) v = prior_sd * rng.normal();
    for (std::size_t from = schedule.steps(); from >= 1; --from) {
      const Vector s = score(x, from);
      const ReverseStep step = reverse_step_moments(schedule, sampler, from, x, s);
      const double sd = std::sqrt(step.noise_variance);
      for (std::size_t a = 0; a < dim; ++a) x[a] = step.mean[a] + sd * rng.normal();
    }
    std::copy(x.begin(), x.end(), out.values.begin() + p * dim);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Score = gradient of the smoothed energy

struct ScoreIdentityReport {
  Vector analytic;
  Vector smoothed;
  double max_abs_difference = 0.0;
  bool pass = false;
};

/// Evaluates grad log p_i(x) twice: from the mixture formula and as the
/// smoothed-energy gradient with E = log p_data (pushed through the kernel's
/// mean scale) and phi = the step-i kernel. With h > 0 the smoothed side
/// integrates the KDE density by quadrature; with h = 0 it smooths the point
/// masses directly. Dimension must be 1 or 2.
inline ScoreIdentityReport smoothed_score_identity_check(
    const KdeDataModel& data, const NoiseSchedule& schedule, std::size_t i,
    std::span<const double> x, double tolerance = 1e-6,
    std::size_t points_per_axis = 0) {
  schedule.check_step(i);
  const std::size_t d = data.dim();
  require(d == 1 || d == 2, "smoothed_score_identity_check: dimension must be 1 or 2");
  require(x.size() == d, "smoothed_score_identity_check: dimension mismatch");
  const double scale = schedule.mean_scale(i);
  const double var = schedule.kernel_variance(i);
  require(scale > 0.0 && var > 0.0,
          "smoothed_score_identity_check: degenerate kernel at this step");
  const Covariance cov = Covariance::diagonal(Vector(d, var));

  ScoreIdentityReport report;
  report.analytic = analytic_score(data, schedule, i, x);

  if (data.bandwidth == 0.0) {
    PointMasses masses;
    const double log_mass = -std::log(static_cast<double>(data.size()));
    for (const auto& p : data.points) {
      Vector y(d);
      for (std::size_t a = 0; a < d; ++a) y[a] = scale * p[a];
      masses.points.push_back(std::move(y));
      masses.log_masses.push_back(log_mass);
    }
    report.smoothed = smoothed_gradient(masses, cov, x);
  } else {
    // Density of y = scale * x0 under the KDE.
    const double h2 = scale * scale * data.bandwidth * data.bandwidth;
    EnergyModel log_data([&data, scale, h2, d](std::span<const double> y) {
      Vector terms(data.size());
      for (std::size_t k = 0; k < data.size(); ++k) {
        double sq = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double diff = y[a] - scale * data.points[k][a];
          sq += diff * diff;
        }
        terms[k] = -0.5 * sq / h2;
      }
      return log_sum_exp(terms) - std::log(static_cast<double>(data.size())) -
             0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * h2);
    });
    SmoothedEnergy se;
    se.energy = log_data;
    se.covariance = cov;
    se.temperature = 1.0;
    // The KDE log-density is defined everywhere; the support only has to
    // contain the integration window.
    const double reach = (se.window_sigmas + 1.0) * std::sqrt(var);
    se.support_lower.resize(d);
    se.support_upper.resize(d);
    for (std::size_t a = 0; a < d; ++a) {
      se.support_lower[a] = x[a] - reach;
      se.support_upper[a] = x[a] + reach;
    }
    if (points_per_axis == 0) {
      // Resolve the narrower of the kernel and the data bandwidth.
      const double width = std::min(std::sqrt(var), std::sqrt(h2));
      const double needed = 2.0 * se.window_sigmas * std::sqrt(var) / width * 12.0;
      points_per_axis = static_cast<std::size_t>(
          std::clamp(needed, 401.0, d == 1 ? 20001.0 : 601.0));
    }
    se.points_per_axis = points_per_axis;
    report.smoothed = smoothed_gradient(se, x);
  }

  for (std::size_t a = 0; a < d; ++a) {
    report.max_abs_difference =
        std::max(report.max_abs_difference,
                 std::abs(report.analytic[a] - report.smoothed[a]));
  }
  report.pass = report.max_abs_difference <= tolerance;
  return report;
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_DIFFUSION_HPP_
