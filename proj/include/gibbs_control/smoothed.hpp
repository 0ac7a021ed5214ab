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

// The Gaussian-smoothed energy
//
//   E~(U) = tau * log  integral exp(E(y) / tau) phi(U - y) dy,
//
// its gradient, the gradient-ascent step U + (1/tau) Sigma grad E~(U), and
// numerical checks that tie these to MPPI, Jensen's bound and the Gibbs free
// energy. Integrals are trapezoidal in one or two dimensions and always
// accumulated in log space.

#ifndef GIBBS_CONTROL_SMOOTHED_HPP_
#define GIBBS_CONTROL_SMOOTHED_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"
#include "gibbs_control/mppi.hpp"

namespace gibbs {

// The query point's integration window leaves the declared support.
class OutOfSupport : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Covariance (dimension 1 or 2, full)

class Covariance {
 public:
  static Covariance diagonal(std::span<const double> variances) {
    require(variances.size() == 1 || variances.size() == 2,
            "Covariance: dimension must be 1 or 2");
    Covariance c;
    c.dim_ = variances.size();
    c.m_ = {variances[0], 0.0, 0.0, c.dim_ == 2 ? variances[1] : 0.0};
    c.validate();
    return c;
  }

  static Covariance scalar(double variance) {
    const double v[] = {variance};
    return diagonal(v);
  }

  static Covariance full2(double xx, double xy, double yy) {
    Covariance c;
    c.dim_ = 2;
    c.m_ = {xx, xy, xy, yy};
    c.validate();
    return c;
  }

  /// Sequence-level covariance of a kernel over a d-dimensional flat vector.
  static Covariance from_kernel(const NoiseKernel& kernel, std::size_t d) {
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = kernel.sequence_variance(i);
    return diagonal(v);
  }

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t r, std::size_t c) const {
    return m_[r * 2 + c];
  }
  double stddev(std::size_t axis) const { return std::sqrt((*this)(axis, axis)); }
  bool is_diagonal() const { return dim_ == 1 || m_[1] == 0.0; }

  double determinant() const {
    return dim_ == 1 ? m_[0] : m_[0] * m_[3] - m_[1] * m_[2];
  }

  Vector multiply(std::span<const double> v) const {
    if (dim_ == 1) return {m_[0] * v[0]};
    return {m_[0] * v[0] + m_[1] * v[1], m_[2] * v[0] + m_[3] * v[1]};
  }

  Vector solve(std::span<const double> v) const {
    if (dim_ == 1) return {v[0] / m_[0]};
    const double det = determinant();
    return {(m_[3] * v[0] - m_[1] * v[1]) / det,
            (-m_[2] * v[0] + m_[0] * v[1]) / det};
  }

  // log N(delta; 0, this).
  double log_density(std::span<const double> delta) const {
    const Vector s = solve(delta);
    double quad = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) quad += delta[i] * s[i];
    return -0.5 * quad -
           0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) +
                  std::log(determinant()));
  }

  // Lower Cholesky factor applied to z.
  Vector correlate(std::span<const double> z) const {
    if (dim_ == 1) return {std::sqrt(m_[0]) * z[0]};
    const double l00 = std::sqrt(m_[0]);
    const double l10 = m_[2] / l00;
    const double l11 = std::sqrt(m_[3] - l10 * l10);
    return {l00 * z[0], l10 * z[0] + l11 * z[1]};
  }

 private:
  void validate() const {
    for (double v : m_) require(std::isfinite(v), "Covariance: non-finite entry");
    require(m_[0] > 0.0, "Covariance: not positive-definite");
    if (dim_ == 2) {
      require(m_[3] > 0.0 && determinant() > 0.0,
              "Covariance: not positive-definite");
    }
  }

  std::size_t dim_ = 1;
  std::array<double, 4> m_{1.0, 0.0, 0.0, 0.0};
};

// ---------------------------------------------------------------------------
// QuadratureGrid

/// Uniform tensor grid with trapezoidal weights, one or two axes.
class QuadratureGrid {
 public:
  static constexpr std::size_t kMinPoints = 16;

  QuadratureGrid(Vector lower, Vector upper, std::vector<std::size_t> counts)
      : lower_(std::move(lower)),
        upper_(std::move(upper)),
        counts_(std::move(counts)) {
    require(lower_.size() == upper_.size() && lower_.size() == counts_.size(),
            "QuadratureGrid: axis description sizes differ");
    require(dim() == 1 || dim() == 2, "QuadratureGrid: dimension must be 1 or 2");
    for (std::size_t a = 0; a < dim(); ++a) {
      require(std::isfinite(lower_[a]) && std::isfinite(upper_[a]) &&
                  lower_[a] < upper_[a],
              "QuadratureGrid: bounds must be finite and ordered");
      require(counts_[a] >= kMinPoints, "QuadratureGrid: need >= 16 points");
    }
  }

  static QuadratureGrid uniform(double lower, double upper, std::size_t count) {
    return QuadratureGrid({lower}, {upper}, {count});
  }

  std::size_t dim() const { return lower_.size(); }
  std::size_t size() const {
    std::size_t n = 1;
    for (auto c : counts_) n *= c;
    return n;
  }
  double lower(std::size_t a) const { return lower_[a]; }
  double upper(std::size_t a) const { return upper_[a]; }
  std::size_t count(std::size_t a) const { return counts_[a]; }
  double spacing(std::size_t a) const {
    return (upper_[a] - lower_[a]) / static_cast<double>(counts_[a] - 1);
  }
  double volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) v *= upper_[a] - lower_[a];
    return v;
  }

  // Point j; axis 0 varies fastest.
  Vector point(std::size_t j) const {
    Vector p(dim());
    for (std::size_t a = 0; a < dim(); ++a) {
      const std::size_t idx = j % counts_[a];
      j /= counts_[a];
      p[a] = lower_[a] + spacing(a) * static_cast<double>(idx);
    }
    return p;
  }

  double weight(std::size_t j) const {
    double w = 1.0;
    for (std::size_t a = 0; a < dim(); ++a) {
      const std::size_t idx = j % counts_[a];
      j /= counts_[a];
      const bool edge = idx == 0 || idx + 1 == counts_[a];
      w *= spacing(a) * (edge ? 0.5 : 1.0);
    }
    return w;
  }

  bool contains(std::span<const double> lo, std::span<const double> hi) const {
    for (std::size_t a = 0; a < dim(); ++a) {
      if (lo[a] < lower_[a] || hi[a] > upper_[a]) return false;
    }
    return true;
  }

 private:
  Vector lower_;
  Vector upper_;
  std::vector<std::size_t> counts_;
};

// ---------------------------------------------------------------------------
// SmoothedEnergy

enum class SmoothingMode { kQuadrature, kMonteCarlo };

/// Base energy E, smoothing kernel phi = N(0, covariance) and temperature.
/// In quadrature mode the integral runs over a window of `window_sigmas`
/// kernel standard deviations around the query, which must stay inside
/// `support`.
struct SmoothedEnergy {
  EnergyModel energy;
  Covariance covariance = Covariance::scalar(1.0);
  double temperature = 1.0;
  Vector support_lower{-10.0};
  Vector support_upper{10.0};
  SmoothingMode mode = SmoothingMode::kQuadrature;
  std::size_t points_per_axis = 801;
  double window_sigmas = 8.0;
  // Monte Carlo mode.
  std::size_t mc_samples = 0;
  RunSeed mc_seed{};

  std::size_t dim() const { return covariance.dim(); }

  void validate() const {
    require(static_cast<bool>(energy), "SmoothedEnergy: missing energy");
    require(temperature > 0.0 && std::isfinite(temperature),
            "SmoothedEnergy: temperature must be positive");
    require(support_lower.size() == dim() && support_upper.size() == dim(),
            "SmoothedEnergy: support dimension differs from kernel");
    require(window_sigmas >= 6.0,
            "SmoothedEnergy: window must cover >= 6 kernel deviations");
    if (mode == SmoothingMode::kMonteCarlo) {
      require(mc_samples >= 1, "SmoothedEnergy: Monte Carlo needs samples");
    }
  }
};

inline SmoothedEnergy make_smoothed(EnergyModel energy, Covariance cov,
                                    double temperature, double support_lo,
                                    double support_hi) {
  SmoothedEnergy se;
  se.energy = std::move(energy);
  se.covariance = cov;
  se.temperature = temperature;
  se.support_lower.assign(cov.dim(), support_lo);
  se.support_upper.assign(cov.dim(), support_hi);
  return se;
}

/// Nodes y_j with log kernel weights (normalized to sum to one) and the
/// tempered energies E(y_j)/tau.
struct SmoothingNodes {
  std::vector<Vector> points;
  Vector log_kernel;
  Vector scaled_energy;
};

inline QuadratureGrid integration_window(const SmoothedEnergy& se,
                                         std::span<const double> u) {
  const std::size_t d = se.dim();
  Vector lo(d), hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double half = se.window_sigmas * se.covariance.stddev(a);
    lo[a] = u[a] - half;
    hi[a] = u[a] + half;
    if (lo[a] < se.support_lower[a] || hi[a] > se.support_upper[a]) {
      throw OutOfSupport("smoothed energy: query " + std::to_string(u[a]) +
                         " on axis " + std::to_string(a) +
                         " is not in the safe interior of the support");
    }
  }
  return QuadratureGrid(lo, hi, std::vector<std::size_t>(d, se.points_per_axis));
}

inline SmoothingNodes smoothing_nodes(const SmoothedEnergy& se,
                                      std::span<const double> u) {
  se.validate();
  require(u.size() == se.dim(), "smoothed energy: query dimension mismatch");
  require(all_finite(u), "smoothed energy: non-finite query");
  SmoothingNodes nodes;
  const double tau = se.temperature;

  if (se.mode == SmoothingMode::kMonteCarlo) {
    const std::size_t n = se.mc_samples;
    nodes.points.resize(n);
    nodes.log_kernel.assign(n, -std::log(static_cast<double>(n)));
    nodes.scaled_energy.resize(n);
    parallel_for(n, [&](std::size_t i) {
      CounterRng rng(se.mc_seed, i);
      Vector z(se.dim());
      for (double& v : z) v = rng.normal();
      Vector y = se.covariance.correlate(z);
      for (std::size_t a = 0; a < y.size(); ++a) y[a] += u[a];
      nodes.scaled_energy[i] = se.energy(y) / tau;
      nodes.points[i] = std::move(y);
    });
    return nodes;
  }

  const QuadratureGrid grid = integration_window(se, u);
  const std::size_t n = grid.size();
  nodes.points.resize(n);
  nodes.log_kernel.resize(n);
  nodes.scaled_energy.resize(n);
  parallel_for(n, [&](std::size_t j) {
    Vector y = grid.point(j);
    Vector delta(y.size());
    for (std::size_t a = 0; a < y.size(); ++a) delta[a] = u[a] - y[a];
    nodes.log_kernel[j] =
        std::log(grid.weight(j)) + se.covariance.log_density(delta);
    nodes.scaled_energy[j] = se.energy(y) / tau;
    nodes.points[j] = std::move(y);
  });
  const double norm = log_sum_exp(nodes.log_kernel);
  for (double& lk : nodes.log_kernel) lk -= norm;
  return nodes;
}

namespace detail {

inline Vector tilted_log_weights(const SmoothingNodes& nodes) {
  Vector lw(nodes.points.size());
  for (std::size_t j = 0; j < lw.size(); ++j) {
    lw[j] = nodes.log_kernel[j] + nodes.scaled_energy[j];
  }
  return lw;
}

// E_r[y - U] under r_j proportional to phi(U - y_j) exp(E(y_j) / tau).
inline Vector tilted_mean_offset(const SmoothingNodes& nodes,
                                 std::span<const double> u) {
  const Vector w = softmax_weights(tilted_log_weights(nodes), 1.0);
  Vector offset(u.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    for (std::size_t a = 0; a < u.size(); ++a) {
      offset[a] += w[j] * (nodes.points[j][a] - u[a]);
    }
  }
  return offset;
}

}  // namespace detail

/// E~(U) = tau * log integral exp(E(y)/tau) phi(U - y) dy.
inline double smoothed_energy(const SmoothedEnergy& se,
                              std::span<const double> u) {
  const SmoothingNodes nodes = smoothing_nodes(se, u);
  return se.temperature * log_sum_exp(detail::tilted_log_weights(nodes));
}

/// grad E~(U) = tau * Sigma^-1 E_r[y - U], from differentiating the kernel
/// under the integral sign.
inline Vector smoothed_gradient(const SmoothedEnergy& se,
                                std::span<const double> u) {
  const SmoothingNodes nodes = smoothing_nodes(se, u);
  Vector g = se.covariance.solve(detail::tilted_mean_offset(nodes, u));
  for (double& v : g) v *= se.temperature;
  return g;
}

/// U' = U + (1/tau) Sigma grad E~(U).
inline Vector gradient_ascent_step(const SmoothedEnergy& se,
                                   std::span<const double> u) {
  const Vector g = smoothed_gradient(se, u);
  Vector step = se.covariance.multiply(g);
  Vector next(u.begin(), u.end());
  for (std::size_t a = 0; a < next.size(); ++a) {
    next[a] += step[a] / se.temperature;
  }
  return next;
}

/// integral E(y) phi(U - y) dy on the same nodes as smoothed_energy.
inline double local_gaussian_average(const SmoothedEnergy& se,
                                     std::span<const double> u) {
  const SmoothingNodes nodes = smoothing_nodes(se, u);
  double avg = 0.0;
  for (std::size_t j = 0; j < nodes.points.size(); ++j) {
    avg += std::exp(nodes.log_kernel[j]) * nodes.scaled_energy[j];
  }
  return avg * se.temperature;
}

/// A discrete base measure sum_k m_k delta(y - y_k) in place of exp(E).
/// Smoothing it gives E~(U) = log sum_k m_k phi(U - y_k) (tau = 1).
struct PointMasses {
  std::vector<Vector> points;
  Vector log_masses;
};

inline SmoothingNodes atomic_nodes(const PointMasses& masses,
                                   const Covariance& covariance,
                                   std::span<const double> u) {
  require(!masses.points.empty() &&
              masses.points.size() == masses.log_masses.size(),
          "PointMasses: need one log mass per point");
  require(u.size() == covariance.dim(), "smoothed energy: dimension mismatch");
  SmoothingNodes nodes;
  nodes.points = masses.points;
  nodes.log_kernel.resize(masses.points.size());
  nodes.scaled_energy.assign(masses.points.size(), 0.0);
  for (std::size_t k = 0; k < masses.points.size(); ++k) {
    Vector delta(u.size());
    for (std::size_t a = 0; a < u.size(); ++a) {
      delta[a] = u[a] - masses.points[k][a];
    }
    nodes.log_kernel[k] = masses.log_masses[k] + covariance.log_density(delta);
  }
  return nodes;
}

inline double smoothed_energy(const PointMasses& masses,
                              const Covariance& covariance,
                              std::span<const double> u) {
  return log_sum_exp(atomic_nodes(masses, covariance, u).log_kernel);
}

inline Vector smoothed_gradient(const PointMasses& masses,
                                const Covariance& covariance,
                                std::span<const double> u) {
  const SmoothingNodes nodes = atomic_nodes(masses, covariance, u);
  return covariance.solve(detail::tilted_mean_offset(nodes, u));
}

struct JensenReport {
  double smoothed = 0.0;
  double lower_bound = 0.0;
  bool holds = false;
};

/// E~(U) >= integral E(y) phi(U - y) dy, up to `tolerance`.
inline JensenReport jensen_bound_check(const SmoothedEnergy& se,
                                       std::span<const double> u,
                                       double tolerance = 1e-6) {
  require(se.mode == SmoothingMode::kQuadrature,
          "jensen_bound_check: quadrature mode required");
  JensenReport r;
  r.smoothed = smoothed_energy(se, u);
  r.lower_bound = local_gaussian_average(se, u);
  r.holds = r.smoothed >= r.lower_bound - tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// MPPI vs smoothed-gradient equivalence

struct EquivalenceRow {
  std::size_t samples = 0;
  Vector mppi_step;        // first replicate's U' - U
  Vector abs_error;        // |mppi_step - gradient step|, per coordinate
  Vector standard_error;   // delta-method SE of the first replicate
  double rms_error = 0.0;  // RMS of ||error|| over all replicates
};

struct EquivalenceReport {
  Vector gradient_step;  // (1/tau) Sigma grad E~(U) from quadrature
  std::vector<EquivalenceRow> rows;
  double slope = 0.0;  // least-squares log10(rms_error) vs log10(N)
  bool pass = false;   // largest N: every coordinate within 3 SE
};

inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log10(x[i]) / n;
    my += std::log10(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log10(x[i]) - mx;
    sxy += dx * (std::log10(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Compares one MPPI step from U against the quadrature gradient-ascent step
/// for every N in `sample_counts`. The kernel must be diagonal; U is treated
/// as a single control step of dimension d.
inline EquivalenceReport check_mppi_equivalence(
    const SmoothedEnergy& se, std::span<const double> u,
    std::span<const std::size_t> sample_counts, RunSeed seed,
    std::size_t replicates = 32) {
  require(se.covariance.is_diagonal(),
          "check_mppi_equivalence: diagonal kernel required");
  require(!sample_counts.empty() && replicates >= 1,
          "check_mppi_equivalence: nothing to compare");
  const std::size_t d = se.dim();
  Vector variances(d);
  for (std::size_t a = 0; a < d; ++a) variances[a] = se.covariance(a, a);
  const NoiseKernel kernel(variances, se.temperature);
  const ControlSequence u0(1, d, Vector(u.begin(), u.end()));

  EquivalenceReport report;
  const Vector target = gradient_ascent_step(se, u);
  report.gradient_step.resize(d);
  for (std::size_t a = 0; a < d; ++a) report.gradient_step[a] = target[a] - u[a];

  Vector ns, rms;
  for (std::size_t c = 0; c < sample_counts.size(); ++c) {
    const std::size_t n = sample_counts[c];
    EquivalenceRow row;
    row.samples = n;
    double sq_sum = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      PerturbationBatch batch = sample_perturbations(
          kernel, 1, n, substream(seed, c * replicates + r));
      const ControlSequence next =
          mppi_update_on_batch(u0, se.energy, se.temperature, batch);
      Vector step(d);
      double err2 = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        step[a] = next[a] - u[a];
        const double e = step[a] - report.gradient_step[a];
        err2 += e * e;
      }
      sq_sum += err2;
      if (r == 0) {
        row.mppi_step = step;
        row.abs_error.resize(d);
        row.standard_error.assign(d, 0.0);
        const auto& w = batch.weights();
        for (std::size_t a = 0; a < d; ++a) {
          row.abs_error[a] = std::abs(step[a] - report.gradient_step[a]);
          double var = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dev = batch.perturbation(i)[a] - step[a];
            var += w[i] * w[i] * dev * dev;
          }
          row.standard_error[a] = std::sqrt(var);
        }
      }
    }
    row.rms_error = std::sqrt(sq_sum / static_cast<double>(replicates));
    ns.push_back(static_cast<double>(n));
    rms.push_back(row.rms_error);
    report.rows.push_back(std::move(row));
  }
  if (ns.size() >= 2) report.slope = loglog_slope(ns, rms);
  const EquivalenceRow& last = report.rows.back();
  report.pass = true;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(last.abs_error[a] < 3.0 * last.standard_error[a])) report.pass = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Gibbs free energy on a grid

/// Density values q_j on a grid; sum_j w_j q_j = 1.
struct GridDistribution {
  QuadratureGrid grid;
  Vector density;

  double mass() const {
    double m = 0.0;
    for (std::size_t j = 0; j < density.size(); ++j) {
      m += grid.weight(j) * density[j];
    }
    return m;
  }
};

inline GridDistribution normalized_on_grid(const QuadratureGrid& grid,
                                           Vector density) {
  require(density.size() == grid.size(), "normalized_on_grid: size mismatch");
  GridDistribution q{grid, std::move(density)};
  const double m = q.mass();
  require(m > 0.0 && std::isfinite(m), "normalized_on_grid: zero mass");
  for (double& v : q.density) v /= m;
  return q;
}

/// G_q = sum_j w_j q_j E(y_j) - tau sum_j w_j q_j log q_j.
inline double gibbs_free_energy(const GridDistribution& q,
                                const EnergyModel& energy, double temperature) {
  require(q.density.size() == q.grid.size(),
          "gibbs_free_energy: density does not match grid");
  require(temperature > 0.0, "gibbs_free_energy: temperature must be positive");
  for (double v : q.density) {
    require(v >= 0.0 && std::isfinite(v), "gibbs_free_energy: negative density");
  }
  require(std::abs(q.mass() - 1.0) <= 1e-8,
          "gibbs_free_energy: distribution is not normalized");
  double expected = 0.0;
  double neg_entropy = 0.0;
  for (std::size_t j = 0; j < q.density.size(); ++j) {
    const double mass = q.grid.weight(j) * q.density[j];
    if (mass == 0.0) continue;
    expected += mass * energy(q.grid.point(j));
    neg_entropy += mass * std::log(q.density[j]);
  }
  return expected - temperature * neg_entropy;
}

struct GibbsMeasureOnGrid {
  GridDistribution density;
  double log_normalizer = 0.0;  // log Z, Z = sum_j w_j exp(E_j / tau)
};

/// p*(y) = exp(E(y)/tau) / Z on the grid.
inline GibbsMeasureOnGrid gibbs_measure_on_grid(const QuadratureGrid& grid,
                                                const EnergyModel& energy,
                                                double temperature) {
  require(temperature > 0.0, "gibbs_measure: temperature must be positive");
  Vector log_terms(grid.size());
  Vector scaled(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    scaled[j] = energy(grid.point(j)) / temperature;
    log_terms[j] = std::log(grid.weight(j)) + scaled[j];
  }
  const double log_z = log_sum_exp(log_terms);
  Vector density(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    density[j] = std::exp(scaled[j] - log_z);
  }
  return {GridDistribution{grid, std::move(density)}, log_z};
}

}  // namespace gibbs

#endif  // GIBBS_CONTROL_SMOOTHED_HPP_
