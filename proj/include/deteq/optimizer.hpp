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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "deteq/channel.hpp"
#include "deteq/fading.hpp"
#include "deteq/fixed_point.hpp"
#include "deteq/numeric.hpp"
#include "deteq/rng.hpp"
#include "deteq/types.hpp"
#include "deteq/waterfill.hpp"

namespace deteq {

/// Deterministic effective transmit-side channel
///
///   F = diag_k( sum_l beta_{l,k} e_{l,k} T_{l,k} ) + Hbar^H Phi Hbar,
///
/// built from the BASE model's T and Hbar together with e and Phi taken
/// from a fixed point solved on the covariance-replaced model. The rate
/// with covariances Q then separates as logdet(I + F Q).
template <typename Scalar>
ComplexMatrix<Scalar> effective_channel_F(const ChannelModel<Scalar>& base_model,
                                          const FixedPointSolution<Scalar>& solution) {
  const SystemDims& dims = base_model.dims;
  if (solution.e.rows() != dims.sets() || solution.e.cols() != dims.users() ||
      solution.Phi.rows() != dims.total_bs())
    throw ConfigError("effective_channel_F: solution does not match the model dimensions");
  const int n = dims.total_ue();
  ComplexMatrix<Scalar> f = ComplexMatrix<Scalar>::Zero(n, n);
  for (int k = 0; k < dims.users(); ++k) {
    const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
    ComplexMatrix<Scalar> block = ComplexMatrix<Scalar>::Zero(nk, nk);
    for (int l = 0; l < dims.sets(); ++l)
      block += Scalar(dims.beta(l, k)) * solution.e(l, k) * base_model.T[l][k];
    f.block(off, off, nk, nk) = block;
  }
  const ComplexMatrix<Scalar> hbar = base_model.stacked_hbar();
  f += hbar.adjoint() * solution.Phi * hbar;
  return hermitized<Scalar>(f);
}

/// Per-user interference-whitened gain P_k = [(I + F Q_{\k})^-1 F]_k where
/// Q_{\k} zeroes user k's block. For PSD F and Q the resolvent is provably
/// nonsingular; a conditioning guard is kept anyway.
template <typename Scalar>
ComplexMatrix<Scalar> interference_functional_Pk(const ComplexMatrix<Scalar>& f,
                                                 const InputCovariances<Scalar>& q,
                                                 const SystemDims& dims, int k) {
  const int n = dims.total_ue();
  if (f.rows() != n || f.cols() != n)
    throw ConfigError("interference_functional_Pk: F must be n x n");
  if (k < 0 || k >= dims.users()) throw ConfigError("interference_functional_Pk: bad user index");

  ComplexMatrix<Scalar> q_minus_k = q.block_diagonal(dims);
  const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
  q_minus_k.block(off, off, nk, nk).setZero();

  ComplexMatrix<Scalar> m = ComplexMatrix<Scalar>::Identity(n, n) + f * q_minus_k;
  Eigen::PartialPivLU<ComplexMatrix<Scalar>> lu(m);
  if (!(lu.rcond() > Scalar(1e-14)))
    throw NumericalError("interference_functional_Pk: (I + F Q) is numerically singular");
  const ComplexMatrix<Scalar> resolvent = lu.solve(f);
  return hermitized<Scalar>(ComplexMatrix<Scalar>(resolvent.block(off, off, nk, nk)));
}

/// Deterministic rate (nats per receive antenna) at noise sigma2 for
/// explicit input covariances Q, via the separated form
/// logdet(I + F Q)/N + sum_l logdet(sigma2 Phi_l^-1... ) - correction,
/// with the fixed point fully converged on the covariance-replaced model.
template <typename Scalar>
struct CovRateResult {
  Scalar v = 0;
  FixedPointSolution<Scalar> solution;  // fixed point of the replaced model
  ComplexMatrix<Scalar> F;              // effective channel from the base model
};

template <typename Scalar>
CovRateResult<Scalar> deterministic_sum_rate_with_covariances(const ChannelModel<Scalar>& model,
                                                              Scalar sigma2,
                                                              const InputCovariances<Scalar>& q,
                                                              SolverConfig config = {}) {
  if (sigma2 <= Scalar(0))
    throw ConfigError("deterministic_sum_rate_with_covariances: sigma2 must be > 0");
  const SystemDims& dims = model.dims;
  const int N = dims.total_bs(), n = dims.total_ue();

  CovRateResult<Scalar> out;
  const ChannelModel<Scalar> replaced = apply_input_covariance(model, q);
  config.omega = (double)sigma2;
  out.solution = solve_fixed_point(replaced, config);
  out.F = effective_channel_F(model, out.solution);

  // logdet(I + F Q) through the Hermitian similarity I + Q^1/2 F Q^1/2,
  // which is positive definite and Cholesky-friendly.
  ComplexMatrix<Scalar> q_root = ComplexMatrix<Scalar>::Zero(n, n);
  for (int k = 0; k < dims.users(); ++k) {
    const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
    q_root.block(off, off, nk, nk) = hermitian_sqrt(q.Q[k]);
  }
  const ComplexMatrix<Scalar> iq = hermitized<Scalar>(ComplexMatrix<Scalar>(
      ComplexMatrix<Scalar>::Identity(n, n) + q_root * out.F * q_root));
  const Scalar logdet_iq = logdet_hermitian_pd(iq, "I + FQ");

  Scalar correction = 0;
  for (int l = 0; l < dims.sets(); ++l)
    for (int k = 0; k < dims.users(); ++k)
      correction += Scalar(dims.bs_antennas[l]) * out.solution.e(l, k) * out.solution.e_tilde(l, k);
  correction *= sigma2 / Scalar(N);

  Scalar logdet_phi = 0;  // sum_l logdet(sigma2 Phi_l)
  for (int l = 0; l < dims.sets(); ++l) {
    const int Nl = dims.bs_antennas[l], off = dims.bs_offset(l);
    logdet_phi += logdet_hermitian_pd(
        ComplexMatrix<Scalar>(out.solution.Phi.block(off, off, Nl, Nl)), "Phi block");
    logdet_phi += Scalar(Nl) * std::log(sigma2);
  }

  out.v = (logdet_iq - logdet_phi) / Scalar(N) - correction;
  return out;
}

/// Per-iteration diagnostics of the covariance optimization. The objective
/// sequence is recorded but never asserted monotone; convergence of the
/// coupled update is an open question.
template <typename Scalar>
struct IwfTrace {
  struct Row {
    int iteration;
    Scalar v;          // deterministic rate at this iterate (converged inner solve)
    Scalar dq_fro;     // max_k ||Q_k - Q_k_prev||_F
    RealMatrix<Scalar> e, e_tilde;
  };
  std::vector<Row> rows;
  std::string terminated_reason;  // "converged" or "iteration_cap"
  Scalar final_delta_v = 0;
};

template <typename Scalar>
struct IwfResult {
  InputCovariances<Scalar> Q_star;
  Scalar v_star = 0;
  IwfTrace<Scalar> trace;
};

/// Covariance optimization by iterative water-filling with single-sweep
/// statistics updates: each outer iteration folds the current Q into the
/// channel statistics, performs ONE update of the scalar fixed-point
/// unknowns (not a full inner solve), rebuilds the effective channel F, and
/// water-fills every user against its interference functional P_k. The
/// per-user water-filling steps within an iteration are independent.
///
/// The reported objective uses a fully converged fixed point so the
/// stopping metric is well defined. Returns the best iterate seen
/// (including the identity start), which keeps the result no worse than
/// uniform power even when the iteration is stopped by the cap.
template <typename Scalar>
IwfResult<Scalar> iterative_waterfilling(const ChannelModel<Scalar>& model, Scalar sigma2,
                                         Scalar stop_threshold = Scalar(1e-8),
                                         int max_outer = 500, SolverConfig inner = {}) {
  if (sigma2 <= Scalar(0)) throw ConfigError("iterative_waterfilling: sigma2 must be > 0");
  if (stop_threshold <= Scalar(0))
    throw ConfigError("iterative_waterfilling: stop_threshold must be > 0");
  const SystemDims& dims = model.dims;
  const int L = dims.sets(), K = dims.users();

  IwfResult<Scalar> out;
  InputCovariances<Scalar> q = InputCovariances<Scalar>::identity(dims);
  RealMatrix<Scalar> e = RealMatrix<Scalar>::Ones(L, K);
  RealMatrix<Scalar> et = RealMatrix<Scalar>::Ones(L, K);

  Scalar v_prev = deterministic_sum_rate_with_covariances(model, sigma2, q, inner).v;
  out.Q_star = q;
  out.v_star = v_prev;

  out.trace.terminated_reason = "iteration_cap";
  for (int t = 1; t <= max_outer; ++t) {
    const ChannelModel<Scalar> replaced = apply_input_covariance(model, q);

    // Single sweep of the scalar unknowns on the replaced statistics.
    detail::FixedPointWorkspace<Scalar> ws(replaced, sigma2);
    ws.e = e;
    ws.et = et;
    ws.materialize();
    ws.next_traces(e, et);

    // F uses the freshly updated scalars: rebuild Phi from et on the
    // (never-replaced) receive side.
    ws.e = e;
    ws.et = et;
    ws.materialize();
    const FixedPointSolution<Scalar> snapshot = ws.package(t, false, Scalar(0));
    const ComplexMatrix<Scalar> f = effective_channel_F(model, snapshot);

    InputCovariances<Scalar> q_next = q;
    Scalar dq = 0;
    for (int k = 0; k < K; ++k) {
      const ComplexMatrix<Scalar> pk = interference_functional_Pk(f, q, dims, k);
      const auto wf = waterfill_single<Scalar>(pk, Scalar(dims.ue_antennas[k]));
      dq = std::max(dq, Scalar((wf.Q - q.Q[k]).norm()));
      q_next.Q[k] = wf.Q;
    }
    q = q_next;

    const Scalar v_now = deterministic_sum_rate_with_covariances(model, sigma2, q, inner).v;
    typename IwfTrace<Scalar>::Row row;
    row.iteration = t;
    row.v = v_now;
    row.dq_fro = dq;
    row.e = e;
    row.e_tilde = et;
    out.trace.rows.push_back(std::move(row));

    if (v_now > out.v_star) {
      out.v_star = v_now;
      out.Q_star = q;
    }
    out.trace.final_delta_v = std::abs(v_now - v_prev);
    if (out.trace.final_delta_v < stop_threshold) {
      out.trace.terminated_reason = "converged";
      break;
    }
    v_prev = v_now;
  }
  return out;
}

/// Maximum first-order optimality violation over users for a feasible Q.
/// With G_k = [(I + F Q)^-1 F]_k / N and mu_k = lambda_max(G_k), checks
/// that G_k restricted to Q_k's range is mu_k I (stationarity), that the
/// slack multiplier mu_k I - G_k is orthogonal to Q_k, and that the trace
/// budget binds. All terms are normalized by mu_k, so the residual is
/// scale-free; it is ~0 exactly when water-filling optimality holds.
template <typename Scalar>
Scalar kkt_residual(const ChannelModel<Scalar>& model, Scalar sigma2,
                    const InputCovariances<Scalar>& q, SolverConfig inner = {}) {
  const SystemDims& dims = model.dims;
  const int n = dims.total_ue(), N = dims.total_bs();
  const CovRateResult<Scalar> rate = deterministic_sum_rate_with_covariances(model, sigma2, q, inner);

  const ComplexMatrix<Scalar> qb = q.block_diagonal(dims);
  const ComplexMatrix<Scalar> m = ComplexMatrix<Scalar>::Identity(n, n) + rate.F * qb;
  const ComplexMatrix<Scalar> grad_full = Eigen::PartialPivLU<ComplexMatrix<Scalar>>(m).solve(
                                              rate.F) /
                                          Scalar(N);

  Scalar worst = 0;
  for (int k = 0; k < dims.users(); ++k) {
    const int nk = dims.ue_antennas[k], off = dims.ue_offset(k);
    const ComplexMatrix<Scalar> g = hermitized<Scalar>(
        ComplexMatrix<Scalar>(grad_full.block(off, off, nk, nk)));

    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es_q(q.Q[k]);
    const RealVector<Scalar> qvals = es_q.eigenvalues();
    const Scalar q_max = std::max(qvals.maxCoeff(), Scalar(0));
    const Scalar rank_tol = Scalar(1e-8) * std::max(q_max, Scalar(1));

    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es_g(g, Eigen::EigenvaluesOnly);
    const Scalar mu = es_g.eigenvalues().maxCoeff();
    const Scalar mu_floor = std::max(mu, std::numeric_limits<Scalar>::min());

    // Projector onto the active (positive-power) subspace of Q_k.
    ComplexMatrix<Scalar> basis(nk, 0);
    for (int i = 0; i < nk; ++i)
      if (qvals(i) > rank_tol) {
        basis.conservativeResize(nk, basis.cols() + 1);
        basis.col(basis.cols() - 1) = es_q.eigenvectors().col(i);
      }

    Scalar stationarity = 0;
    if (basis.cols() > 0) {
      const ComplexMatrix<Scalar> g_active = basis.adjoint() * g * basis;
      stationarity = spectral_norm_hermitian<Scalar>(
                         ComplexMatrix<Scalar>(g_active - mu * ComplexMatrix<Scalar>::Identity(
                                                              basis.cols(), basis.cols()))) /
                     mu_floor;
    }
    const Scalar slackness =
        std::abs(std::real(trace_of_product<Scalar>(
            ComplexMatrix<Scalar>(mu * ComplexMatrix<Scalar>::Identity(nk, nk) - g), q.Q[k]))) /
        (mu_floor * Scalar(nk));
    const Scalar trace_gap = std::abs(Scalar(nk) - std::real(q.Q[k].trace())) / Scalar(nk);

    worst = std::max({worst, stationarity + slackness + trace_gap});
  }
  return worst;
}

/// Projection of a Hermitian matrix onto {Q PSD, tr(Q) = budget}: clamp the
/// eigenvalues to the simplex scaled by the budget.
template <typename Scalar>
ComplexMatrix<Scalar> project_to_trace_simplex(const ComplexMatrix<Scalar>& a, Scalar budget) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(hermitized<Scalar>(a));
  RealVector<Scalar> v = es.eigenvalues();
  const int n = static_cast<int>(v.size());
  std::vector<Scalar> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar cumsum = 0, tau = 0;
  int rho = 0;
  for (int j = 0; j < n; ++j) {
    cumsum += sorted[j];
    const Scalar t = (cumsum - budget) / Scalar(j + 1);
    if (sorted[j] - t > Scalar(0)) {
      rho = j + 1;
      tau = t;
    }
  }
  (void)rho;
  const RealVector<Scalar> clamped = (v.array() - tau).max(Scalar(0));
  return hermitized<Scalar>(
      ComplexMatrix<Scalar>(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint()));
}

/// Desk-scale stochastic baseline for the covariance optimum: projected
/// stochastic gradient ascent directly on the sampled objective
/// E{ logdet(I + H Q H^H / sigma2) } / N. Steps decay as 1/sqrt(t); the
/// per-draw stream contract keeps the run deterministic in (seed). A
/// paired objective probe halves the step size when the objective drops
/// beyond `guard_tolerance` over a probe window; if the step underflows
/// `step_floor` the run aborts.
template <typename Scalar>
InputCovariances<Scalar> stochastic_reference_optimizer(
    const ChannelModel<Scalar>& model, Scalar sigma2, const FadingKind& fading,
    int samples_per_step, int steps, std::uint64_t seed, Scalar step_size,
    Scalar guard_tolerance = Scalar(0.05), Scalar step_floor = Scalar(1e-7)) {
  if (sigma2 <= Scalar(0)) throw ConfigError("stochastic_reference_optimizer: sigma2 must be > 0");
  if (samples_per_step < 1 || steps < 1)
    throw ConfigError("stochastic_reference_optimizer: need at least one step and one draw");
  const SystemDims& dims = model.dims;
  const int N = dims.total_bs(), n = dims.total_ue();

  const ChannelSampler<Scalar> sampler(model);
  InputCovariances<Scalar> q = InputCovariances<Scalar>::identity(dims);

  const int probe_draws = std::max(64, samples_per_step);
  const auto probe_objective = [&](const InputCovariances<Scalar>& cand) {
    // Common random numbers: a fixed probe stream makes objective
    // comparisons paired.
    Scalar acc = 0;
    const ComplexMatrix<Scalar> qb = cand.block_diagonal(dims);
    for (int d = 0; d < probe_draws; ++d) {
      auto gen = make_stream(seed ^ 0x9d5c0f8a2e1b3c47ULL, d);
      const ComplexMatrix<Scalar> h = sampler.sample(fading, gen);
      const ComplexMatrix<Scalar> a = ComplexMatrix<Scalar>::Identity(N, N) +
                                      (h * qb * h.adjoint()) / sigma2;
      acc += logdet_hermitian_pd(hermitized<Scalar>(a), "probe");
    }
    return acc / Scalar(probe_draws * N);
  };

  Scalar best_probe = probe_objective(q);
  std::uint64_t draw_counter = 0;

  for (int t = 1; t <= steps; ++t) {
    std::vector<ComplexMatrix<Scalar>> grad(dims.users());
    for (int k = 0; k < dims.users(); ++k)
      grad[k] = ComplexMatrix<Scalar>::Zero(dims.ue_antennas[k], dims.ue_antennas[k]);

    const ComplexMatrix<Scalar> qb = q.block_diagonal(dims);
    for (int d = 0; d < samples_per_step; ++d) {
      auto gen = make_stream(seed, draw_counter++);
      const ComplexMatrix<Scalar> h = sampler.sample(fading, gen);
      const ComplexMatrix<Scalar> m =
          hermitized<Scalar>(ComplexMatrix<Scalar>(sigma2 * ComplexMatrix<Scalar>::Identity(N, N) +
                                                   h * qb * h.adjoint()));
      const ComplexMatrix<Scalar> minv =
          Eigen::LLT<ComplexMatrix<Scalar>>(m).solve(ComplexMatrix<Scalar>::Identity(N, N));
      for (int k = 0; k < dims.users(); ++k) {
        const auto hk = h.middleCols(dims.ue_offset(k), dims.ue_antennas[k]);
        grad[k] += (hk.adjoint() * minv * hk) / Scalar(N);
      }
    }

    const Scalar step = step_size / std::sqrt(Scalar(t));
    for (int k = 0; k < dims.users(); ++k) {
      const ComplexMatrix<Scalar> ascended =
          q.Q[k] + (step / Scalar(samples_per_step)) * grad[k];
      q.Q[k] = project_to_trace_simplex<Scalar>(ascended, Scalar(dims.ue_antennas[k]));
    }

    if (t % 25 == 0 || t == steps) {
      const Scalar now = probe_objective(q);
      if (now < best_probe - guard_tolerance) {
        step_size /= Scalar(2);
        if (step_size < step_floor)
          throw NumericalError("stochastic_reference_optimizer: step size underflow while the "
                               "objective keeps dropping");
      }
      best_probe = std::max(best_probe, now);
    }
  }
  return q;
}

}  // namespace deteq
