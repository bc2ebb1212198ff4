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
#include <limits>
#include <optional>
#include <string>

#include "deteq/channel.hpp"
#include "deteq/numeric.hpp"
#include "deteq/types.hpp"

namespace deteq {

/// Settings for the coupled-trace fixed point. `tolerance` bounds the max
/// absolute change of any scalar unknown per sweep (with a small
/// machine-precision floor relative to the magnitude of the unknowns, since
/// no iteration can settle below round-off). `damping` in (0,1] blends each
/// update; it is halved automatically when the residual grows twice in a
/// row.
struct SolverConfig {
  double omega = 1.0;
  double tolerance = 1e-12;
  int max_iterations = 10000;
  double damping = 1.0;
  // Optional custom starting point, one value per (l,k); defaults to all
  // ones. Used by uniqueness checks that solve from many random starts.
  std::optional<RealMatrix<double>> init_e;
  std::optional<RealMatrix<double>> init_e_tilde;

  void validate() const {
    if (omega <= 0.0) throw ConfigError("SolverConfig: omega must be > 0");
    if (tolerance <= 0.0) throw ConfigError("SolverConfig: tolerance must be > 0");
    if (damping <= 0.0 || damping > 1.0)
      throw ConfigError("SolverConfig: damping must lie in (0, 1]");
    if (max_iterations < 1) throw ConfigError("SolverConfig: max_iterations must be >= 1");
  }
};

/// Solution of the 2LK coupled trace equations at a point omega > 0:
///
///   e_{l,k}  = tr(R_{l,k} [Psi]_l) / N_l
///   et_{l,k} = tr(T_{l,k} [Psit]_k) / n_k
///
/// where [.]_l / [.]_k extract diagonal blocks and
///
///   Phi_l  = (omega I + omega sum_k et_{l,k} R_{l,k})^-1
///   Phit_k = (omega I + omega sum_l beta_{l,k} e_{l,k} T_{l,k})^-1
///   Psi    = (Phi^-1 + omega Hbar Phit Hbar^H)^-1
///   Psit   = (Phit^-1 + omega Hbar^H Phi Hbar)^-1.
///
/// Phi and Phi_tilde are stored as full block-diagonal matrices.
template <typename Scalar>
struct FixedPointSolution {
  Scalar omega = 1;
  RealMatrix<Scalar> e;        // L x K
  RealMatrix<Scalar> e_tilde;  // L x K
  ComplexMatrix<Scalar> Psi;       // N x N
  ComplexMatrix<Scalar> Psi_tilde; // n x n
  ComplexMatrix<Scalar> Phi;       // N x N, block diagonal
  ComplexMatrix<Scalar> Phi_tilde; // n x n, block diagonal
  int iterations_used = 0;
  bool converged = false;
  Scalar residual = 0;
};

namespace detail {

/// Shared sweep machinery: materializes the resolvent-side matrices for the
/// current (e, et) and evaluates the next raw trace values.
template <typename Scalar>
struct FixedPointWorkspace {
  const ChannelModel<Scalar>* model;
  Scalar omega;
  RealMatrix<Scalar> e, et;
  ComplexMatrix<Scalar> Phi, PhiInv, Phit, PhitInv, Psi, Psit;

  FixedPointWorkspace(const ChannelModel<Scalar>& m, Scalar w) : model(&m), omega(w) {
    const int L = m.dims.sets(), K = m.dims.users();
    e = RealMatrix<Scalar>::Ones(L, K);
    et = RealMatrix<Scalar>::Ones(L, K);
  }

  void materialize() {
    const SystemDims& dims = model->dims;
    const int L = dims.sets(), K = dims.users();
    const int N = dims.total_bs(), n = dims.total_ue();
    Phi.setZero(N, N);
    PhiInv.setZero(N, N);
    Phit.setZero(n, n);
    PhitInv.setZero(n, n);

    for (int l = 0; l < L; ++l) {
      const int Nl = dims.bs_antennas[l], off = dims.bs_offset(l);
      ComplexMatrix<Scalar> inv = ComplexMatrix<Scalar>::Identity(Nl, Nl);
      for (int k = 0; k < K; ++k) inv += et(l, k) * model->R[l][k];
      inv *= omega;
      PhiInv.block(off, off, Nl, Nl) = inv;
      Phi.block(off, off, Nl, Nl) =
          Eigen::LLT<ComplexMatrix<Scalar>>(inv).solve(ComplexMatrix<Scalar>::Identity(Nl, Nl));
    }
    for (int k = 0; k < K; ++k) {
      const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
      ComplexMatrix<Scalar> inv = ComplexMatrix<Scalar>::Identity(nk, nk);
      for (int l = 0; l < L; ++l) inv += Scalar(dims.beta(l, k)) * e(l, k) * model->T[l][k];
      inv *= omega;
      PhitInv.block(off, off, nk, nk) = inv;
      Phit.block(off, off, nk, nk) =
          Eigen::LLT<ComplexMatrix<Scalar>>(inv).solve(ComplexMatrix<Scalar>::Identity(nk, nk));
    }

    const ComplexMatrix<Scalar> hbar = model->stacked_hbar();
    const ComplexMatrix<Scalar> a =
        hermitized<Scalar>(PhiInv + omega * (hbar * Phit * hbar.adjoint()));
    Psi = Eigen::LLT<ComplexMatrix<Scalar>>(a).solve(ComplexMatrix<Scalar>::Identity(N, N));
    const ComplexMatrix<Scalar> b =
        hermitized<Scalar>(PhitInv + omega * (hbar.adjoint() * Phi * hbar));
    Psit = Eigen::LLT<ComplexMatrix<Scalar>>(b).solve(ComplexMatrix<Scalar>::Identity(n, n));
  }

  /// Raw next values of (e, et) from the materialized Psi / Psit.
  void next_traces(RealMatrix<Scalar>& e_next, RealMatrix<Scalar>& et_next) const {
    const SystemDims& dims = model->dims;
    const int L = dims.sets(), K = dims.users();
    e_next.resize(L, K);
    et_next.resize(L, K);
    for (int l = 0; l < L; ++l) {
      const int Nl = dims.bs_antennas[l], off = dims.bs_offset(l);
      const ComplexMatrix<Scalar> psi_block = Psi.block(off, off, Nl, Nl);
      for (int k = 0; k < K; ++k)
        e_next(l, k) = std::real(trace_of_product<Scalar>(model->R[l][k], psi_block)) / Scalar(Nl);
    }
    for (int k = 0; k < K; ++k) {
      const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
      const ComplexMatrix<Scalar> psit_block = Psit.block(off, off, nk, nk);
      for (int l = 0; l < L; ++l)
        et_next(l, k) =
            std::real(trace_of_product<Scalar>(model->T[l][k], psit_block)) / Scalar(nk);
    }
  }

  FixedPointSolution<Scalar> package(int iterations, bool converged, Scalar residual) const {
    FixedPointSolution<Scalar> sol;
    sol.omega = omega;
    sol.e = e;
    sol.e_tilde = et;
    sol.Psi = Psi;
    sol.Psi_tilde = Psit;
    sol.Phi = Phi;
    sol.Phi_tilde = Phit;
    sol.iterations_used = iterations;
    sol.converged = converged;
    sol.residual = residual;
    return sol;
  }
};

}  // namespace detail

/// Solve the coupled trace equations by damped Picard sweeps from the given
/// starting point (all ones by default). Convergence is measured on the raw
/// fixed-point residual max |next - current| over all 2LK unknowns, so the
/// returned values satisfy the trace equations to within ~10x tolerance.
/// Throws ConvergenceError when the iteration cap is reached.
template <typename Scalar>
FixedPointSolution<Scalar> solve_fixed_point(const ChannelModel<Scalar>& model,
                                             const SolverConfig& config) {
  config.validate();
  model.check_dims();
  const int L = model.dims.sets(), K = model.dims.users();

  detail::FixedPointWorkspace<Scalar> ws(model, Scalar(config.omega));
  const auto load_init = [&](const std::optional<RealMatrix<double>>& init,
                             RealMatrix<Scalar>& dst, const char* name) {
    if (!init) return;
    if (init->rows() != L || init->cols() != K)
      throw ConfigError(std::string("SolverConfig: ") + name + " must be an L x K grid");
    if ((init->array() <= 0.0).any())
      throw ConfigError(std::string("SolverConfig: ") + name + " entries must be > 0");
    dst = init->template cast<Scalar>();
  };
  load_init(config.init_e, ws.e, "init_e");
  load_init(config.init_e_tilde, ws.et, "init_e_tilde");

  Scalar damping = Scalar(config.damping);
  Scalar prev_delta = std::numeric_limits<Scalar>::infinity();
  int growth_streak = 0;
  RealMatrix<Scalar> e_next, et_next;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    ws.materialize();
    ws.next_traces(e_next, et_next);

    const Scalar delta = std::max((e_next - ws.e).cwiseAbs().maxCoeff(),
                                  (et_next - ws.et).cwiseAbs().maxCoeff());
    const Scalar magnitude =
        std::max({Scalar(1), ws.e.cwiseAbs().maxCoeff(), ws.et.cwiseAbs().maxCoeff()});
    const Scalar floor = Scalar(32) * std::numeric_limits<Scalar>::epsilon() * magnitude;
    const Scalar tol = std::max(Scalar(config.tolerance), floor);

    if (delta < tol) {
      // One final materialization so the returned matrices correspond to
      // the converged scalars.
      ws.e = e_next;
      ws.et = et_next;
      ws.materialize();
      return ws.package(iter, true, delta);
    }

    if (delta > prev_delta) {
      if (++growth_streak >= 2 && damping > Scalar(1.0 / 64)) {
        damping /= Scalar(2);
        growth_streak = 0;
      }
    } else {
      growth_streak = 0;
    }
    prev_delta = delta;

    ws.e += damping * (e_next - ws.e);
    ws.et += damping * (et_next - ws.et);
  }

  ws.materialize();
  ws.next_traces(e_next, et_next);
  const Scalar residual = std::max((e_next - ws.e).cwiseAbs().maxCoeff(),
                                   (et_next - ws.et).cwiseAbs().maxCoeff());
  throw ConvergenceError("fixed point did not converge in " +
                             std::to_string(config.max_iterations) +
                             " sweeps (residual " + std::to_string((double)residual) + ")",
                         (double)residual, config.max_iterations);
}

/// Deterministic equivalent of the expected Stieltjes transform at -omega:
/// tr(Psi) / N. Positive and bounded by 1/omega.
template <typename Scalar>
Scalar deterministic_stieltjes(const FixedPointSolution<Scalar>& solution) {
  return std::real(solution.Psi.trace()) / Scalar(solution.Psi.rows());
}

template <typename Scalar>
struct SumRateResult {
  Scalar v = 0;     // nats per receive antenna; mean of the two forms below
  Scalar v17a = 0;  // receive-side log-det form
  Scalar v17b = 0;  // transmit-side log-det form
  FixedPointSolution<Scalar> solution;
};

namespace detail {

/// Both algebraic forms of the deterministic rate at sigma2 = omega, given a
/// solved fixed point. Internal: callers go through deterministic_sum_rate.
template <typename Scalar>
void evaluate_rate_forms(const ChannelModel<Scalar>& model,
                         const FixedPointSolution<Scalar>& sol, Scalar& v_rx, Scalar& v_tx) {
  const SystemDims& dims = model.dims;
  const Scalar sigma2 = sol.omega;
  const int N = dims.total_bs(), n = dims.total_ue();
  const Scalar log_s2 = std::log(sigma2);

  Scalar correction = 0;
  for (int l = 0; l < dims.sets(); ++l)
    for (int k = 0; k < dims.users(); ++k)
      correction += Scalar(dims.bs_antennas[l]) * sol.e(l, k) * sol.e_tilde(l, k);
  correction *= sigma2 / Scalar(N);

  // -logdet(sigma2 Psi) = logdet(Psi^-1 / sigma2), evaluated blockwise for
  // the block-diagonal factors.
  const Scalar logdet_psi = logdet_hermitian_pd(sol.Psi, "Psi");
  const Scalar logdet_psit = logdet_hermitian_pd(sol.Psi_tilde, "Psi_tilde");

  Scalar logdet_phit = 0;  // sum_k logdet(sigma2 Phit_k)
  for (int k = 0; k < dims.users(); ++k) {
    const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
    logdet_phit += logdet_hermitian_pd(
        ComplexMatrix<Scalar>(sol.Phi_tilde.block(off, off, nk, nk)), "Phi_tilde block");
    logdet_phit += Scalar(nk) * log_s2;
  }
  Scalar logdet_phi = 0;  // sum_l logdet(sigma2 Phi_l)
  for (int l = 0; l < dims.sets(); ++l) {
    const int Nl = dims.bs_antennas[l], off = dims.bs_offset(l);
    logdet_phi += logdet_hermitian_pd(ComplexMatrix<Scalar>(sol.Phi.block(off, off, Nl, Nl)),
                                      "Phi block");
    logdet_phi += Scalar(Nl) * log_s2;
  }

  v_rx = (-(logdet_psi + Scalar(N) * log_s2) - logdet_phit) / Scalar(N) - correction;
  v_tx = (-(logdet_psit + Scalar(n) * log_s2) - logdet_phi) / Scalar(N) - correction;
}

}  // namespace detail

/// Deterministic equivalent of the ergodic sum rate (nats per receive
/// antenna) at noise level sigma2, with identity input covariances. Both
/// algebraic forms are evaluated; they agree up to round-off, and a
/// disagreement beyond 1e-6 raises NumericalError.
template <typename Scalar>
SumRateResult<Scalar> deterministic_sum_rate(const ChannelModel<Scalar>& model, Scalar sigma2,
                                             SolverConfig config = {}) {
  if (sigma2 <= Scalar(0)) throw ConfigError("deterministic_sum_rate: sigma2 must be > 0");
  config.omega = (double)sigma2;
  SumRateResult<Scalar> out;
  out.solution = solve_fixed_point(model, config);
  detail::evaluate_rate_forms(model, out.solution, out.v17a, out.v17b);
  if (std::abs(out.v17a - out.v17b) > Scalar(1e-6))
    throw NumericalError("deterministic rate forms disagree: " + std::to_string((double)out.v17a) +
                         " vs " + std::to_string((double)out.v17b));
  out.v = (out.v17a + out.v17b) / Scalar(2);
  return out;
}

template <typename Scalar>
struct DerivativeCheck {
  Scalar analytic = 0;
  Scalar numeric = 0;
  Scalar rel_err = 0;
};

/// Consistency of the rate with its Stieltjes-transform derivative:
/// dV/dsigma2 = tr(Psi)/N - 1/sigma2, compared against a central finite
/// difference of the rate with the given step.
template <typename Scalar>
DerivativeCheck<Scalar> check_shannon_derivative(const ChannelModel<Scalar>& model, Scalar sigma2,
                                                 Scalar step, SolverConfig config = {}) {
  if (!(sigma2 > step && step > Scalar(0)))
    throw ConfigError("check_shannon_derivative: need sigma2 > step > 0");
  DerivativeCheck<Scalar> out;
  config.omega = (double)sigma2;
  out.analytic = deterministic_stieltjes(solve_fixed_point(model, config)) - Scalar(1) / sigma2;
  const Scalar v_hi = deterministic_sum_rate(model, sigma2 + step, config).v;
  const Scalar v_lo = deterministic_sum_rate(model, sigma2 - step, config).v;
  out.numeric = (v_hi - v_lo) / (Scalar(2) * step);
  out.rel_err = std::abs(out.analytic - out.numeric) /
                std::max(std::abs(out.analytic), std::numeric_limits<Scalar>::min());
  return out;
}

}  // namespace deteq
