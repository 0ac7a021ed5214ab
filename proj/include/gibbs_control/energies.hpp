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

// Closed-form test energies used by the verification suite.

#ifndef GIBBS_CONTROL_ENERGIES_HPP_
#define GIBBS_CONTROL_ENERGIES_HPP_

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "gibbs_control/core.hpp"

namespace gibbs::energies {

inline EnergyModel constant(double c) {
  return EnergyModel([c](std::span<const double>) { return c; });
}

// E(u) = -||u||^2 / (2 * scale).
inline EnergyModel quadratic(double scale = 1.0) {
  return EnergyModel([scale](std::span<const double> u) {
    double s = 0.0;
    for (double v : u) s += v * v;
    return -0.5 * s / scale;
  });
}

// E(u) = g^T u.
inline EnergyModel linear(Vector g) {
  return EnergyModel([g = std::move(g)](std::span<const double> u) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * u[i];
    return s;
  });
}

// E(u) = -depth (u^2 - 1)^2 + tilt u; symmetric when tilt = 0.
inline EnergyModel double_well(double depth = 1.0, double tilt = 0.0) {
  return EnergyModel([depth, tilt](std::span<const double> u) {
    const double a = u[0] * u[0] - 1.0;
    return -depth * a * a + tilt * u[0];
  });
}

/// sum_k a_k cos(w_k . u + b_k) with K random features; smooth with bounded
/// derivatives of every order.
struct FourierEnergy {
  std::vector<Vector> frequencies;
  Vector amplitudes;
  Vector phases;

  double operator()(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
      double arg = phases[k];
      for (std::size_t a = 0; a < u.size(); ++a) arg += frequencies[k][a] * u[a];
      s += amplitudes[k] * std::cos(arg);
    }
    return s;
  }
};

inline EnergyModel random_fourier(std::size_t dim, std::size_t features,
                                  double amplitude, double bandwidth,
                                  RunSeed seed) {
  FourierEnergy f;
  CounterRng rng(seed, 0);
  const double scale = amplitude / std::sqrt(static_cast<double>(features));
  for (std::size_t k = 0; k < features; ++k) {
    Vector w(dim);
    for (double& v : w) v = bandwidth * rng.normal();
    f.frequencies.push_back(std::move(w));
    f.amplitudes.push_back(scale * rng.normal());
    f.phases.push_back(2.0 * std::numbers::pi * rng.uniform());
  }
  return EnergyModel(std::move(f));
}

}  // namespace gibbs::energies

#endif  // GIBBS_CONTROL_ENERGIES_HPP_
