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

#include "gibbs_control/smoothed.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gibbs_control/energies.hpp"

namespace gibbs {
namespace {

double central_difference(const SmoothedEnergy& se, Vector u, std::size_t a,
                          double h = 1e-4) {
  Vector up = u, down = u;
  up[a] += h;
  down[a] -= h;
  return (smoothed_energy(se, up) - smoothed_energy(se, down)) / (2.0 * h);
}

TEST(SmoothedEnergyTest, GaussianClosedForm) {
  // E = -u^2/2, Sigma = 1, tau = 1: E~(u) = -log(2)/2 - u^2/4.
  const auto se =
      make_smoothed(energies::quadratic(), Covariance::scalar(1.0), 1.0, -20, 20);
  const double expected[] = {-0.34657359027997265, -0.59657359027997265,
                             -1.3465735902799727};
  for (int k = 0; k < 3; ++k) {
    const double u[] = {static_cast<double>(k)};
    EXPECT_NEAR(smoothed_energy(se, u), expected[k], 1e-9) << "u=" << k;
    EXPECT_NEAR(smoothed_gradient(se, u)[0], -0.5 * k, 1e-9);
  }
}

TEST(SmoothedEnergyTest, ConstantEnergyIsUnchanged) {
  const auto se =
      make_smoothed(energies::constant(-3.25), Covariance::scalar(0.3), 0.7, -10, 10);
  const double u[] = {1.1};
  EXPECT_NEAR(smoothed_energy(se, u), -3.25, 1e-12);
  EXPECT_NEAR(smoothed_gradient(se, u)[0], 0.0, 1e-12);
  const auto j = jensen_bound_check(se, u);
  EXPECT_NEAR(j.smoothed, j.lower_bound, 1e-12);
}

TEST(SmoothedEnergyTest, LinearEnergyShiftsByHalfQuadraticForm) {
  // tau log E[exp(g y / tau)] = g u + g^2 sigma^2 / (2 tau).
  const double g = 0.8, sigma2 = 0.5, tau = 2.0;
  const auto se = make_smoothed(energies::linear({g}), Covariance::scalar(sigma2),
                                tau, -20, 20);
  const double u[] = {-0.4};
  EXPECT_NEAR(smoothed_energy(se, u), g * u[0] + g * g * sigma2 / (2 * tau), 1e-9);
  EXPECT_NEAR(smoothed_gradient(se, u)[0], g, 1e-9);
}

TEST(SmoothedEnergyTest, GradientMatchesFiniteDifferences) {
  const auto se =
      make_smoothed(energies::double_well(1.5, 0.3), Covariance::scalar(0.2), 0.6,
                    -10, 10);
  for (double x : {-1.3, -0.2, 0.0, 0.7, 1.9}) {
    const double u[] = {x};
    EXPECT_NEAR(smoothed_gradient(se, u)[0], central_difference(se, {x}, 0), 1e-6)
        << "u=" << x;
  }
}

TEST(SmoothedEnergyTest, FullCovarianceGradientMatchesFiniteDifferences) {
  auto se = make_smoothed(energies::random_fourier(2, 8, 1.0, 1.0, {3, 0}),
                          Covariance::full2(0.3, 0.1, 0.2), 1.0, -10, 10);
  se.points_per_axis = 201;
  const Vector u = {0.4, -0.3};
  const Vector g = smoothed_gradient(se, u);
  for (std::size_t a = 0; a < 2; ++a) {
    EXPECT_NEAR(g[a], central_difference(se, u, a), 1e-5) << "axis " << a;
  }
}

TEST(SmoothedEnergyTest, QueryNearSupportEdgeIsOutOfSupport) {
  const auto se =
      make_smoothed(energies::quadratic(), Covariance::scalar(1.0), 1.0, -12, 12);
  const double inside[] = {-3.5};
  const double edge[] = {5.0};
  EXPECT_NO_THROW(smoothed_energy(se, inside));
  EXPECT_THROW(smoothed_energy(se, edge), OutOfSupport);
}

TEST(SmoothedEnergyTest, MonteCarloAgreesWithQuadrature) {
  auto se = make_smoothed(energies::double_well(1.0, 0.5), Covariance::scalar(0.25),
                          1.0, -10, 10);
  const double u[] = {0.3};
  const double quad = smoothed_energy(se, u);
  se.mode = SmoothingMode::kMonteCarlo;
  se.mc_samples = 200000;
  se.mc_seed = {5, 0};
  EXPECT_NEAR(smoothed_energy(se, u), quad, 5e-3);
}

TEST(SmoothedEnergyTest, AscentStepOnQuadraticIsShrinkage) {
  // U' = U + Sigma grad E~ = u / (1 + sigma^2) at tau = 1.
  const double sigma2 = 0.64;
  const auto se = make_smoothed(energies::quadratic(), Covariance::scalar(sigma2),
                                1.0, -20, 20);
  const double u[] = {1.5};
  EXPECT_NEAR(gradient_ascent_step(se, u)[0], 1.5 / (1 + sigma2), 1e-9);
}

TEST(JensenBoundTest, HoldsAcrossRandomEnergies) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto se =
        make_smoothed(energies::random_fourier(1, 6, 2.0, 2.0, {s, 0}),
                      Covariance::scalar(0.3), 0.5, -10, 10);
    CounterRng rng({s, 1}, 0);
    const double u[] = {4.0 * (rng.uniform() - 0.5)};
    const auto r = jensen_bound_check(se, u);
    EXPECT_TRUE(r.holds) << r.smoothed << " < " << r.lower_bound;
  }
}

TEST(PointMassesTest, TwoAtomScoreOracle) {
  // Atoms at -1 and +1, kernel std 0.5, query 0.5.
  const PointMasses atoms{{{-1.0}, {1.0}}, {std::log(0.5), std::log(0.5)}};
  const double x[] = {0.5};
  // mpmath reference (tests/oracles/compute_oracles.py).
  EXPECT_NEAR(smoothed_gradient(atoms, Covariance::scalar(0.25), x)[0],
              1.8561103203032675, 1e-13);
}

TEST(EquivalenceTest, ErrorShrinksAtInverseSquareRootRate) {
  const auto se =
      make_smoothed(energies::double_well(1.0, 0.3), Covariance::scalar(0.3), 1.0,
                    -10, 10);
  const double u[] = {0.4};
  const std::size_t counts[] = {100, 1000, 10000};
  const auto report = check_mppi_equivalence(se, u, counts, {11, 0}, 32);
  EXPECT_NEAR(report.slope, -0.5, 0.15);
  EXPECT_TRUE(report.pass);
}

// ---------------------------- Gibbs free energy -------------------------------

TEST(GibbsFreeEnergyTest, GibbsMeasureAttainsLogPartition) {
  const auto grid = QuadratureGrid::uniform(-4.0, 4.0, 4001);
  const EnergyModel energy = energies::double_well(1.0, 0.4);
  const double tau = 0.7;
  const auto p = gibbs_measure_on_grid(grid, energy, tau);
  EXPECT_NEAR(gibbs_free_energy(p.density, energy, tau), tau * p.log_normalizer,
              1e-9);
}

TEST(GibbsFreeEnergyTest, OtherDistributionsScoreLower) {
  const auto grid = QuadratureGrid::uniform(-4.0, 4.0, 4001);
  const EnergyModel energy = energies::double_well(1.0, 0.4);
  const double tau = 0.7;
  const double best = tau * gibbs_measure_on_grid(grid, energy, tau).log_normalizer;
  for (double mean : {-1.0, 0.0, 1.0}) {
    for (double sd : {0.2, 0.5, 1.0}) {
      Vector density(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double z = (grid.point(j)[0] - mean) / sd;
        density[j] = std::exp(-0.5 * z * z);
      }
      const auto q = normalized_on_grid(grid, density);
      EXPECT_LT(gibbs_free_energy(q, energy, tau), best);
    }
  }
}

TEST(GibbsFreeEnergyTest, UnnormalizedDensityIsRejected) {
  const auto grid = QuadratureGrid::uniform(0.0, 1.0, 64);
  GridDistribution q{grid, Vector(grid.size(), 2.0)};
  EXPECT_THROW(gibbs_free_energy(q, energies::constant(0.0), 1.0),
               ContractViolation);
}

TEST(QuadratureGridTest, TooFewPointsIsRejected) {
  EXPECT_THROW(QuadratureGrid::uniform(0.0, 1.0, 8), ContractViolation);
}

}  // namespace
}  // namespace gibbs
