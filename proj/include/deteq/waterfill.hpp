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
#include <vector>

#include "deteq/numeric.hpp"
#include "deteq/types.hpp"

namespace deteq {

template <typename Scalar>
struct WaterfillResult {
  ComplexMatrix<Scalar> Q;  // maximizer of logdet(I + P Q) under the trace budget
  Scalar mu = 0;            // water level
  int active_modes = 0;     // modes with strictly positive power
  bool degenerate = false;  // P was numerically zero; Q fell back to uniform
};

/// Classical water-filling over the modes of a Hermitian PSD gain matrix P:
/// Q = U diag((1/mu - 1/lambda_i)^+) U^H with the water level chosen so the
/// trace budget binds with equality. The active set is found exactly by
/// expanding in decreasing-eigenvalue order, so no inner tolerance enters.
/// A numerically zero P has a Q-independent objective; we return uniform
/// power with the `degenerate` flag set.
template <typename Scalar>
WaterfillResult<Scalar> waterfill_single(const ComplexMatrix<Scalar>& p_in, Scalar budget) {
  if (budget <= Scalar(0)) throw ConfigError("waterfill_single: budget must be > 0");
  if (p_in.rows() != p_in.cols()) throw ConfigError("waterfill_single: P must be square");
  const int n = static_cast<int>(p_in.rows());

  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(hermitized<Scalar>(p_in));
  const RealVector<Scalar> lambda = es.eigenvalues().cwiseMax(Scalar(0));
  const Scalar lam_max = lambda.maxCoeff();

  WaterfillResult<Scalar> out;
  if (lam_max <= Scalar(0) || !(lam_max > std::numeric_limits<Scalar>::min())) {
    out.Q = (budget / Scalar(n)) * ComplexMatrix<Scalar>::Identity(n, n);
    out.mu = Scalar(0);
    out.active_modes = 0;
    out.degenerate = true;
    return out;
  }

  // Eigenvalues ascending from Eigen; walk indices in descending order.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lambda(a) > lambda(b); });

  // With the m strongest modes active, mu = m / (budget + sum 1/lambda_i);
  // the candidate is valid while the weakest active mode still gets power.
  Scalar inv_sum = 0;
  Scalar mu = 0;
  int active = 0;
  for (int m = 1; m <= n; ++m) {
    const Scalar lam = lambda(order[m - 1]);
    if (lam <= Scalar(0)) break;
    const Scalar candidate_inv_sum = inv_sum + Scalar(1) / lam;
    const Scalar candidate_mu = Scalar(m) / (budget + candidate_inv_sum);
    if (Scalar(1) / candidate_mu - Scalar(1) / lam <= Scalar(0)) break;
    inv_sum = candidate_inv_sum;
    mu = candidate_mu;
    active = m;
  }

  RealVector<Scalar> powers = RealVector<Scalar>::Zero(n);
  for (int m = 0; m < active; ++m) {
    const int i = order[m];
    powers(i) = Scalar(1) / mu - Scalar(1) / lambda(i);
  }
  out.Q = es.eigenvectors() * powers.asDiagonal() * es.eigenvectors().adjoint();
  out.Q = hermitized<Scalar>(out.Q);
  out.mu = mu;
  out.active_modes = active;
  return out;
}

}  // namespace deteq
