// Copyright 2026 The ionrb Authors
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

#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace ionrb {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Propagator exp(-i t H) for H = (bx X + by Y + bz Z) / 2.
///
/// All qubit dynamics in this library reduce to products of these closed-form
/// SU(2) elements; no numerical matrix exponential is involved for two levels.
inline Mat2 su2_exp(double bx, double by, double bz, double t) {
  const double norm = std::sqrt(bx * bx + by * by + bz * bz);
  const double half = 0.5 * norm * t;
  Mat2 u;
  if (norm == 0.0 || half == 0.0) {
    u.setIdentity();
    return u;
  }
  const double c = std::cos(half);
  const double s = std::sin(half) / norm;
  const Complex i{0.0, 1.0};
  u(0, 0) = Complex{c, 0.0} - i * (s * bz);
  u(1, 1) = Complex{c, 0.0} + i * (s * bz);
  u(0, 1) = -i * Complex{s * bx, -s * by};
  u(1, 0) = -i * Complex{s * bx, s * by};
  return u;
}

/// Rotation by `angle` about the equatorial axis at azimuth `axis_phase`.
inline Mat2 equatorial_rotation(double axis_phase, double angle) {
  return su2_exp(std::cos(axis_phase), std::sin(axis_phase), 0.0, angle);
}

/// Rotation about Z by `angle`.
inline Mat2 z_rotation(double angle) { return su2_exp(0.0, 0.0, 1.0, angle); }

/// Multiplies `m` by the global phase that makes its first non-negligible
/// entry (row-major) real and positive.
inline Mat2 canonical_phase(const Mat2& m, double tol = 1e-9) {
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const Complex z = m(r, c);
      if (std::abs(z) > tol) return m * (std::conj(z) / std::abs(z));
    }
  }
  return m;
}

/// Max-entry distance between two matrices after fixing global phase.
inline double phase_distance(const Mat2& a, const Mat2& b) {
  return (canonical_phase(a) - canonical_phase(b)).cwiseAbs().maxCoeff();
}

/// Deviation of U^dagger U from the identity (max entry).
inline double unitarity_defect(const Mat2& u) {
  return (u.adjoint() * u - Mat2::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace ionrb
