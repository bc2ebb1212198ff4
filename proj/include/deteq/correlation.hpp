// mimo-deteq: deterministic-equivalent rate analysis for large-scale MIMO
// multiple-access channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <string>

#include "deteq/numeric.hpp"
#include "deteq/types.hpp"

namespace deteq {

/// Spatial correlation of a half-wavelength uniform linear array under a
/// single path cluster with Gaussian power azimuth profile:
///
///   M[m][n] = integral over phi in [-180, 180] of
///             exp(i pi (m-n) sin(pi phi/180)) * N(phi; theta, delta^2) dphi
///
/// with the azimuth density N in degrees. Evaluated with composite Simpson
/// on a uniform grid restricted to the support of the Gaussian factor,
/// [theta - 12 delta, theta + 12 delta] clipped to [-180, 180]; the mass
/// outside that window is below 1e-31 and does not affect double precision.
/// The result depends only on m-n, so a single pass over the lag axis fills
/// the Toeplitz matrix; the output is symmetrized and PSD-repaired.
///
/// `quadrature_points` must be odd and at least 201.
template <typename Scalar>
ComplexMatrix<Scalar> build_correlation_matrix(double theta_deg, double delta, int size,
                                               int quadrature_points = 7201) {
  if (size < 1) throw ConfigError("build_correlation_matrix: size must be >= 1");
  if (delta <= 0.0) throw ConfigError("build_correlation_matrix: delta must be > 0");
  if (quadrature_points < 201 || quadrature_points % 2 == 0)
    throw ConfigError("build_correlation_matrix: quadrature_points must be odd and >= 201");
  if (theta_deg < -180.0 || theta_deg > 180.0)
    throw ConfigError("build_correlation_matrix: theta must lie in [-180, 180] degrees");

  const double lo = std::max(-180.0, theta_deg - 12.0 * delta);
  const double hi = std::min(180.0, theta_deg + 12.0 * delta);
  const int pts = quadrature_points;
  const double h = (hi - lo) / (pts - 1);
  const double density_norm = 1.0 / std::sqrt(2.0 * M_PI * delta * delta);
  const double deg2rad = M_PI / 180.0;

  // Lag responses c[d] = integral of density * exp(i pi d sin(phi)), d >= 0.
  // Negative lags follow by conjugation.
  std::vector<std::complex<double>> lag(size, {0.0, 0.0});
  for (int i = 0; i < pts; ++i) {
    const double phi = lo + h * i;
    const double z = (phi - theta_deg) / delta;
    const double density = density_norm * std::exp(-0.5 * z * z);
    // Composite Simpson weights 1,4,2,...,2,4,1 (times h/3).
    const double w = (i == 0 || i == pts - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double s = std::sin(deg2rad * phi);
    const std::complex<double> base(std::cos(M_PI * s), std::sin(M_PI * s));
    std::complex<double> phase(1.0, 0.0);
    const double wd = w * density;
    for (int d = 0; d < size; ++d) {
      lag[d] += wd * phase;
      phase *= base;
    }
  }
  for (int d = 0; d < size; ++d) lag[d] *= h / 3.0;

  ComplexMatrix<Scalar> out(size, size);
  for (int m = 0; m < size; ++m)
    for (int n = 0; n < size; ++n) {
      const int d = m - n;
      const std::complex<double> v = d >= 0 ? lag[d] : std::conj(lag[-d]);
      out(m, n) = std::complex<Scalar>(static_cast<Scalar>(v.real()),
                                       static_cast<Scalar>(v.imag()));
    }
  return psd_repaired<Scalar>(out, Scalar(-1e-10), "correlation matrix");
}

/// Rank-1 line-of-sight matrix from half-wavelength ULA steering vectors:
/// receive response [exp(i pi p sin(theta_r))]_p times the conjugated
/// transmit response [exp(-i pi q sin(theta_t))]_q. Every entry has unit
/// modulus, so the squared Frobenius norm is N_l * n_k before any rescaling.
template <typename Scalar>
ComplexMatrix<Scalar> build_los_matrix(double theta_bar_r_deg, double theta_bar_t_deg, int bs_n,
                                       int ue_n) {
  if (bs_n < 1 || ue_n < 1) throw ConfigError("build_los_matrix: dimensions must be >= 1");
  const double deg2rad = M_PI / 180.0;
  const double sr = std::sin(deg2rad * theta_bar_r_deg);
  const double st = std::sin(deg2rad * theta_bar_t_deg);
  ComplexVector<Scalar> a_r(bs_n), a_t(ue_n);
  for (int p = 0; p < bs_n; ++p)
    a_r(p) = std::complex<Scalar>(static_cast<Scalar>(std::cos(M_PI * p * sr)),
                                  static_cast<Scalar>(std::sin(M_PI * p * sr)));
  for (int q = 0; q < ue_n; ++q)
    a_t(q) = std::complex<Scalar>(static_cast<Scalar>(std::cos(M_PI * q * st)),
                                  static_cast<Scalar>(-std::sin(M_PI * q * st)));
  return a_r * a_t.adjoint();
}

}  // namespace deteq
