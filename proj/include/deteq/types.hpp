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

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace deteq {

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Invalid configuration or precondition violation (bad input, not bad math).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (indefinite matrix where PD was required, etc.).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap before reaching tolerance.
struct ConvergenceError : NumericalError {
  ConvergenceError(const std::string& msg, double last_residual, int iterations)
      : NumericalError(msg), residual(last_residual), iterations(iterations) {}
  double residual;
  int iterations;
};

/// Antenna bookkeeping for a system of L base-station antenna sets and K
/// users. Indices l, k are 0-based throughout the library.
struct SystemDims {
  std::vector<int> bs_antennas;  // N_l, one entry per antenna set
  std::vector<int> ue_antennas;  // n_k, one entry per user

  int sets() const { return static_cast<int>(bs_antennas.size()); }
  int users() const { return static_cast<int>(ue_antennas.size()); }

  int total_bs() const {
    int s = 0;
    for (int v : bs_antennas) s += v;
    return s;
  }
  int total_ue() const {
    int s = 0;
    for (int v : ue_antennas) s += v;
    return s;
  }

  /// Row offset of antenna set l in the stacked N-dimensional receive space.
  int bs_offset(int l) const {
    int s = 0;
    for (int j = 0; j < l; ++j) s += bs_antennas[j];
    return s;
  }
  /// Column offset of user k in the stacked n-dimensional transmit space.
  int ue_offset(int k) const {
    int s = 0;
    for (int j = 0; j < k; ++j) s += ue_antennas[j];
    return s;
  }

  double beta(int l, int k) const {
    return static_cast<double>(bs_antennas[l]) / static_cast<double>(ue_antennas[k]);
  }

  void validate() const {
    if (bs_antennas.empty() || ue_antennas.empty())
      throw ConfigError("SystemDims: need at least one antenna set and one user");
    for (int v : bs_antennas)
      if (v < 1) throw ConfigError("SystemDims: every N_l must be >= 1");
    for (int v : ue_antennas)
      if (v < 1) throw ConfigError("SystemDims: every n_k must be >= 1");
  }

  bool operator==(const SystemDims& other) const = default;
};

/// Per-link propagation parameters. Angles are in degrees (matching the
/// config file convention); spreads are the RMS azimuth spreads of the
/// Gaussian power profile; kappa is the LOS-to-scatter power ratio and g
/// the linear pathloss gain.
struct LinkSpec {
  double theta_r_deg = 0.0;      // mean angle of arrival
  double delta_r = 0.1;          // RMS spread, receive side
  double theta_t_deg = 0.0;      // mean angle of departure
  double delta_t = 0.1;          // RMS spread, transmit side
  double theta_bar_r_deg = 0.0;  // LOS arrival angle
  double theta_bar_t_deg = 0.0;  // LOS departure angle
  double kappa = 0.0;            // Rician factor, >= 0
  double g = 1.0;                // pathloss gain, > 0

  void validate() const {
    if (kappa < 0.0) throw ConfigError("LinkSpec: kappa must be >= 0");
    if (g <= 0.0) throw ConfigError("LinkSpec: g must be > 0");
    if (delta_r <= 0.0 || delta_t <= 0.0)
      throw ConfigError("LinkSpec: angular spreads must be > 0");
  }
};

/// Per-user transmit covariances Q_k with the trace budget tr(Q_k) <= n_k.
template <typename Scalar>
struct InputCovariances {
  std::vector<ComplexMatrix<Scalar>> Q;  // Q[k] is n_k x n_k Hermitian PSD

  static InputCovariances identity(const SystemDims& dims) {
    InputCovariances out;
    out.Q.reserve(dims.users());
    for (int k = 0; k < dims.users(); ++k)
      out.Q.push_back(ComplexMatrix<Scalar>::Identity(dims.ue_antennas[k], dims.ue_antennas[k]));
    return out;
  }

  /// Assemble the block-diagonal n x n matrix diag(Q_1, ..., Q_K).
  ComplexMatrix<Scalar> block_diagonal(const SystemDims& dims) const {
    const int n = dims.total_ue();
    ComplexMatrix<Scalar> out = ComplexMatrix<Scalar>::Zero(n, n);
    for (int k = 0; k < dims.users(); ++k) {
      const int off = dims.ue_offset(k);
      const int nk = dims.ue_antennas[k];
      out.block(off, off, nk, nk) = Q[k];
    }
    return out;
  }

  void validate(const SystemDims& dims, Scalar trace_slack = Scalar(1e-9),
                Scalar eig_floor = Scalar(-1e-10)) const {
    if (static_cast<int>(Q.size()) != dims.users())
      throw ConfigError("InputCovariances: one Q_k required per user");
    for (int k = 0; k < dims.users(); ++k) {
      const int nk = dims.ue_antennas[k];
      if (Q[k].rows() != nk || Q[k].cols() != nk)
        throw ConfigError("InputCovariances: Q_" + std::to_string(k + 1) + " has wrong size");
      if (std::real(Q[k].trace()) > Scalar(nk) + trace_slack)
        throw ConfigError("InputCovariances: tr(Q_" + std::to_string(k + 1) +
                          ") exceeds the power budget");
      Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(Q[k], Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < eig_floor)
        throw ConfigError("InputCovariances: Q_" + std::to_string(k + 1) +
                          " is not positive semidefinite");
    }
  }
};

}  // namespace deteq
