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

#include "gibbs_control/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

namespace gibbs {
namespace {

// ------------------------------- log_sum_exp ---------------------------------

TEST(LogSumExpTest, TwoEqualTerms) {
  const double v[] = {0.0, 0.0};
  EXPECT_NEAR(log_sum_exp(v), std::log(2.0), 1e-15);
}

TEST(LogSumExpTest, LargeValuesDoNotOverflow) {
  const double v[] = {1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogSumExpTest, SmallValuesMatchDirectSummation) {
  const double v[] = {0.0, 1.0, 2.0};
  // mpmath reference (tests/oracles/compute_oracles.py).
  EXPECT_NEAR(log_sum_exp(v), 2.4076059644443803, 1e-14);
  const double direct = std::log(std::exp(0.0) + std::exp(1.0) + std::exp(2.0));
  EXPECT_NEAR(log_sum_exp(v), direct, 1e-14);
}

TEST(LogSumExpTest, EmptyInputIsContractViolation) {
  EXPECT_THROW(log_sum_exp(std::vector<double>{}), ContractViolation);
}

TEST(LogSumExpTest, BoundedByMaxAndMaxPlusLogCount) {
  CounterRng rng({7, 0}, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 17);
    for (double& x : v) x = 300.0 * (rng.uniform() - 0.5);
    const double lse = log_sum_exp(v);
    const double max = *std::max_element(v.begin(), v.end());
    EXPECT_GE(lse, max);
    EXPECT_LE(lse, max + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

// ----------------------------- softmax_weights -------------------------------

TEST(SoftmaxWeightsTest, EqualEnergiesGiveUniformWeights) {
  const double e[] = {3.5, 3.5, 3.5};
  for (double tau : {0.1, 1.0, 7.0}) {
    for (double w : softmax_weights(e, tau)) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
  }
}

TEST(SoftmaxWeightsTest, SingleEnergy) {
  const double e[] = {-42.0};
  EXPECT_EQ(softmax_weights(e, 0.5), std::vector<double>{1.0});
}

TEST(SoftmaxWeightsTest, DirectEvaluation) {
  const double e[] = {0.0, std::log(3.0)};
  const auto w = softmax_weights(e, 1.0);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
}

TEST(SoftmaxWeightsTest, NonPositiveTemperatureIsRejected) {
  const double e[] = {0.0, 1.0};
  EXPECT_THROW(softmax_weights(e, 0.0), ContractViolation);
  EXPECT_THROW(softmax_weights(e, -1.0), ContractViolation);
}

TEST(SoftmaxWeightsTest, ShiftInvarianceAndScaleCovariance) {
  CounterRng rng({11, 0}, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> e(2 + trial % 9);
    for (double& x : e) x = 50.0 * rng.normal();
    const double tau = 0.1 + 3.0 * rng.uniform();
    const double shift = 1e3 * rng.normal();
    const double c = 0.2 + 5.0 * rng.uniform();
    std::vector<double> shifted = e, scaled = e;
    for (double& x : shifted) x += shift;
    for (double& x : scaled) x *= c;
    const auto w = softmax_weights(e, tau);
    const auto ws = softmax_weights(shifted, tau);
    const auto wc = softmax_weights(scaled, c * tau);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += w[i];
      EXPECT_GE(w[i], 0.0);
      EXPECT_NEAR(ws[i], w[i], 1e-9);
      EXPECT_NEAR(wc[i], w[i], 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SoftmaxWeightsTest, MinusInfinityGetsZeroWeight) {
  const double e[] = {-std::numeric_limits<double>::infinity(), 0.0};
  const auto w = softmax_weights(e, 1.0);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[1], 1.0);
}

// --------------------------- sample_perturbations ----------------------------

TEST(SamplePerturbationsTest, ZeroCovarianceIsRejected) {
  EXPECT_THROW(NoiseKernel({0.0}, 1.0), ContractViolation);
  EXPECT_THROW(NoiseKernel({1.0}, 0.0), ContractViolation);
}

TEST(SamplePerturbationsTest, FixedSeedIsDeterministic) {
  const auto kernel = NoiseKernel({0.3, 2.0}, 1.0);
  const auto a = sample_perturbations(kernel, 5, 64, {123, 4});
  const auto b = sample_perturbations(kernel, 5, 64, {123, 4});
  for (std::size_t i = 0; i < a.samples(); ++i) {
    const auto x = a.perturbation(i);
    const auto y = b.perturbation(i);
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
  const auto c = sample_perturbations(kernel, 5, 64, {123, 5});
  EXPECT_NE(a.perturbation(0)[0], c.perturbation(0)[0]);
}

TEST(SamplePerturbationsTest, AddingSamplesKeepsEarlierOnes) {
  const auto kernel = NoiseKernel::isotropic(2, 0.5, 1.0);
  const auto small = sample_perturbations(kernel, 3, 10, {9, 0});
  const auto large = sample_perturbations(kernel, 3, 1000, {9, 0});
  for (std::size_t i = 0; i < small.samples(); ++i) {
    const auto x = small.perturbation(i);
    const auto y = large.perturbation(i);
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST(SamplePerturbationsTest, ThreadCountDoesNotChangeSamples) {
  const auto kernel = NoiseKernel::isotropic(1, 1.0, 1.0);
  setenv("GIBBS_CONTROL_THREADS", "1", 1);
  const auto serial = sample_perturbations(kernel, 4, 5000, {1, 2});
  setenv("GIBBS_CONTROL_THREADS", "8", 1);
  const auto parallel = sample_perturbations(kernel, 4, 5000, {1, 2});
  unsetenv("GIBBS_CONTROL_THREADS");
  for (std::size_t i = 0; i < serial.samples(); ++i) {
    const auto x = serial.perturbation(i);
    const auto y = parallel.perturbation(i);
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST(SamplePerturbationsTest, MomentsMatchKernel) {
  const double sigma2 = 0.49;
  const std::size_t n = 100000;
  const auto batch =
      sample_perturbations(NoiseKernel({sigma2}, 1.0), 1, n, {2024, 0});
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = batch.perturbation(i)[0];
    mean += x;
    sq += x * x;
  }
  mean /= n;
  const double var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(sigma2) / std::sqrt(double(n)));
  EXPECT_LT(std::abs(var - sigma2), 0.05 * sigma2);
}

TEST(ControlSequenceTest, ShapeAndFiniteness) {
  EXPECT_THROW(ControlSequence(0, 1), ContractViolation);
  EXPECT_THROW(ControlSequence(2, 1, std::vector<double>{1.0}),
               ContractViolation);
  EXPECT_THROW(
      ControlSequence(1, 1, std::vector<double>{std::nan("")}),
      ContractViolation);
  ControlSequence u(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(u.step(1)[0], 3.0);
  EXPECT_EQ(u.step(2)[1], 6.0);
}

TEST(GibbsMeasureTest, LogDensityNeedsNormalizer) {
  GibbsMeasure p{EnergyModel([](std::span<const double> u) { return -u[0]; }),
                 2.0, std::nullopt};
  const double u[] = {1.0};
  EXPECT_DOUBLE_EQ(p.log_unnormalized(u), -0.5);
  EXPECT_THROW(p.log_density(u), ContractViolation);
  p.log_normalizer = 0.25;
  EXPECT_DOUBLE_EQ(p.log_density(u), -0.75);
}

}  // namespace
}  // namespace gibbs
