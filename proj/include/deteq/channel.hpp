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

#include <random>
#include <string>
#include <vector>

#include "deteq/correlation.hpp"
#include "deteq/fading.hpp"
#include "deteq/numeric.hpp"
#include "deteq/types.hpp"

namespace deteq {

/// Two-sided correlated Rician channel model. Per link (l,k) it holds the
/// receive correlation R[l][k] (N_l x N_l), transmit correlation T[l][k]
/// (n_k x n_k) and LOS matrix Hbar[l][k] (N_l x n_k), normalized so that
///
///   tr(T)        = n_k,
///   tr(R)        = g N_l / (kappa + 1),
///   tr(Hbar Hbar^H) = kappa g N_l / (kappa + 1),
///
/// which makes E{ ||H_{l,k}||_F^2 } = g N_l independent of the correlation
/// pattern. This struct is the single source of truth consumed by the
/// deterministic solvers, the Monte-Carlo estimators, and the optimizer.
template <typename Scalar>
struct ChannelModel {
  SystemDims dims;
  std::vector<std::vector<ComplexMatrix<Scalar>>> R;     // [l][k], N_l x N_l
  std::vector<std::vector<ComplexMatrix<Scalar>>> T;     // [l][k], n_k x n_k
  std::vector<std::vector<ComplexMatrix<Scalar>>> Hbar;  // [l][k], N_l x n_k
  std::vector<std::vector<double>> kappa;                // [l][k]
  std::vector<std::vector<double>> g;                    // [l][k]

  /// The stacked N x n LOS matrix [Hbar_1 ... Hbar_K], Hbar_k row-stacked
  /// over antenna sets.
  ComplexMatrix<Scalar> stacked_hbar() const {
    const int N = dims.total_bs(), n = dims.total_ue();
    ComplexMatrix<Scalar> out = ComplexMatrix<Scalar>::Zero(N, n);
    for (int l = 0; l < dims.sets(); ++l)
      for (int k = 0; k < dims.users(); ++k)
        out.block(dims.bs_offset(l), dims.ue_offset(k), dims.bs_antennas[l],
                  dims.ue_antennas[k]) = Hbar[l][k];
    return out;
  }

  /// Expected squared Frobenius norm of the full channel, sum over links of
  /// tr(R) tr(T) / n_k + tr(Hbar Hbar^H).
  Scalar expected_total_power() const {
    Scalar acc = 0;
    for (int l = 0; l < dims.sets(); ++l)
      for (int k = 0; k < dims.users(); ++k)
        acc += std::real(R[l][k].trace()) * std::real(T[l][k].trace()) /
                   Scalar(dims.ue_antennas[k]) +
               Hbar[l][k].squaredNorm();
    return acc;
  }

  void check_dims() const {
    dims.validate();
    const auto grid_ok = [&](const auto& grid) {
      return static_cast<int>(grid.size()) == dims.sets() &&
             static_cast<int>(grid.front().size()) == dims.users();
    };
    if (!grid_ok(R) || !grid_ok(T) || !grid_ok(Hbar))
      throw ConfigError("ChannelModel: per-link grids must be L x K");
    for (int l = 0; l < dims.sets(); ++l)
      for (int k = 0; k < dims.users(); ++k) {
        const int Nl = dims.bs_antennas[l], nk = dims.ue_antennas[k];
        if (R[l][k].rows() != Nl || R[l][k].cols() != Nl || T[l][k].rows() != nk ||
            T[l][k].cols() != nk || Hbar[l][k].rows() != Nl || Hbar[l][k].cols() != nk)
          throw ConfigError("ChannelModel: matrix dimensions at link (" + std::to_string(l + 1) +
                            "," + std::to_string(k + 1) + ") do not match SystemDims");
      }
  }
};

/// Build the normalized model from per-link angular parameters. Correlation
/// matrices come from build_correlation_matrix, the LOS matrices from
/// build_los_matrix; all three are then rescaled to the trace normalization
/// above. Links with kappa = 0 get Hbar = 0.
template <typename Scalar>
ChannelModel<Scalar> assemble_model(const SystemDims& dims,
                                    const std::vector<std::vector<LinkSpec>>& specs,
                                    int quadrature_points = 7201) {
  dims.validate();
  const int L = dims.sets(), K = dims.users();
  if (static_cast<int>(specs.size()) != L)
    throw ConfigError("assemble_model: spec grid must have L rows");
  for (const auto& row : specs)
    if (static_cast<int>(row.size()) != K)
      throw ConfigError("assemble_model: spec grid must have K columns");

  ChannelModel<Scalar> model;
  model.dims = dims;
  model.R.assign(L, {});
  model.T.assign(L, {});
  model.Hbar.assign(L, {});
  model.kappa.assign(L, std::vector<double>(K, 0.0));
  model.g.assign(L, std::vector<double>(K, 1.0));

  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const LinkSpec& spec = specs[l][k];
      const int Nl = dims.bs_antennas[l], nk = dims.ue_antennas[k];
      try {
        spec.validate();
        ComplexMatrix<Scalar> r =
            build_correlation_matrix<Scalar>(spec.theta_r_deg, spec.delta_r, Nl,
                                             quadrature_points);
        ComplexMatrix<Scalar> t =
            build_correlation_matrix<Scalar>(spec.theta_t_deg, spec.delta_t, nk,
                                             quadrature_points);
        t *= Scalar(nk) / std::real(t.trace());
        r *= Scalar(spec.g * Nl / (spec.kappa + 1.0)) / std::real(r.trace());

        ComplexMatrix<Scalar> hbar = ComplexMatrix<Scalar>::Zero(Nl, nk);
        if (spec.kappa > 0.0) {
          hbar = build_los_matrix<Scalar>(spec.theta_bar_r_deg, spec.theta_bar_t_deg, Nl, nk);
          const Scalar target = Scalar(spec.kappa * spec.g * Nl / (spec.kappa + 1.0));
          hbar *= std::sqrt(target / hbar.squaredNorm());
        }

        model.R[l].push_back(std::move(r));
        model.T[l].push_back(std::move(t));
        model.Hbar[l].push_back(std::move(hbar));
        model.kappa[l][k] = spec.kappa;
        model.g[l][k] = spec.g;
      } catch (const std::exception& e) {
        throw ConfigError("link (" + std::to_string(l + 1) + "," + std::to_string(k + 1) +
                          "): " + e.what());
      }
    }
  }
  return model;
}

/// Spectral-norm report for the boundedness assumption behind the
/// large-system analysis. Report-only: callers decide what to do with
/// links exceeding c_max.
template <typename Scalar>
struct AssumptionReport {
  struct LinkNorms {
    int l, k;
    Scalar norm_r, norm_t, norm_hbar_sq;  // ||R||, ||T||, ||Hbar Hbar^H||
    bool exceeds;
  };
  std::vector<LinkNorms> links;
  Scalar max_norm = 0;
  Scalar c_max = 0;
  bool all_within_bound = true;
};

template <typename Scalar>
AssumptionReport<Scalar> validate_assumptions(const ChannelModel<Scalar>& model,
                                              Scalar c_max = Scalar(1e3)) {
  AssumptionReport<Scalar> report;
  report.c_max = c_max;
  for (int l = 0; l < model.dims.sets(); ++l)
    for (int k = 0; k < model.dims.users(); ++k) {
      typename AssumptionReport<Scalar>::LinkNorms row;
      row.l = l;
      row.k = k;
      row.norm_r = spectral_norm_hermitian(model.R[l][k]);
      row.norm_t = spectral_norm_hermitian(model.T[l][k]);
      const ComplexMatrix<Scalar> hh = model.Hbar[l][k] * model.Hbar[l][k].adjoint();
      row.norm_hbar_sq = spectral_norm_hermitian(hh);
      const Scalar link_max = std::max({row.norm_r, row.norm_t, row.norm_hbar_sq});
      row.exceeds = link_max > c_max;
      report.all_within_bound = report.all_within_bound && !row.exceeds;
      report.max_norm = std::max(report.max_norm, link_max);
      report.links.push_back(row);
    }
  return report;
}

/// Fold per-user input covariances into the channel statistics:
/// T := Q^(1/2) T Q^(1/2) and Hbar := Hbar Q^(1/2). R is untouched and the
/// trace normalization is deliberately not re-imposed.
template <typename Scalar>
ChannelModel<Scalar> apply_input_covariance(const ChannelModel<Scalar>& model,
                                            const InputCovariances<Scalar>& q) {
  if (static_cast<int>(q.Q.size()) != model.dims.users())
    throw ConfigError("apply_input_covariance: one Q_k required per user");
  ChannelModel<Scalar> out = model;
  for (int k = 0; k < model.dims.users(); ++k) {
    const int nk = model.dims.ue_antennas[k];
    if (q.Q[k].rows() != nk || q.Q[k].cols() != nk)
      throw ConfigError("apply_input_covariance: Q_" + std::to_string(k + 1) +
                        " has wrong dimensions");
    const ComplexMatrix<Scalar> root = hermitian_sqrt(q.Q[k]);
    for (int l = 0; l < model.dims.sets(); ++l) {
      out.T[l][k] = hermitized<Scalar>(root * model.T[l][k] * root);
      out.Hbar[l][k] = model.Hbar[l][k] * root;
    }
  }
  return out;
}

/// Draws stacked channel realizations H = [H_1 ... H_K] with
/// H_{l,k} = R^(1/2) X T^(1/2) + Hbar and X i.i.d. unit-variance entries
/// scaled by 1/sqrt(n_k). Hermitian square roots are precomputed once; the
/// sampler itself is immutable, so concurrent calls with distinct engines
/// are safe.
template <typename Scalar>
class ChannelSampler {
 public:
  explicit ChannelSampler(const ChannelModel<Scalar>& model) : model_(&model) {
    model.check_dims();
    const int L = model.dims.sets(), K = model.dims.users();
    sqrt_r_.assign(L, {});
    sqrt_t_.assign(L, {});
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) {
        sqrt_r_[l].push_back(hermitian_sqrt(model.R[l][k]));
        sqrt_t_[l].push_back(hermitian_sqrt(model.T[l][k]));
      }
  }

  const ChannelModel<Scalar>& model() const { return *model_; }

  ComplexMatrix<Scalar> sample(const FadingKind& fading, std::mt19937_64& gen) const {
    const SystemDims& dims = model_->dims;
    const int N = dims.total_bs(), n = dims.total_ue();
    ComplexMatrix<Scalar> h = ComplexMatrix<Scalar>::Zero(N, n);
    ComplexMatrix<Scalar> x;
    for (int l = 0; l < dims.sets(); ++l)
      for (int k = 0; k < dims.users(); ++k) {
        const int Nl = dims.bs_antennas[l], nk = dims.ue_antennas[k];
        x.resize(Nl, nk);
        fill_iid_unit(x, fading, gen);
        x *= Scalar(1) / std::sqrt(Scalar(nk));
        h.block(dims.bs_offset(l), dims.ue_offset(k), Nl, nk) =
            sqrt_r_[l][k] * x * sqrt_t_[l][k] + model_->Hbar[l][k];
      }
    return h;
  }

 private:
  const ChannelModel<Scalar>* model_;
  std::vector<std::vector<ComplexMatrix<Scalar>>> sqrt_r_, sqrt_t_;
};

/// One-shot convenience wrapper; prefer ChannelSampler in sampling loops.
template <typename Scalar>
ComplexMatrix<Scalar> sample_channel(const ChannelModel<Scalar>& model, const FadingKind& fading,
                                     std::mt19937_64& gen) {
  return ChannelSampler<Scalar>(model).sample(fading, gen);
}

}  // namespace deteq
