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

#include <Eigen/Dense>

#include "deteq/types.hpp"

namespace deteq {

template <typename Scalar>
ComplexMatrix<Scalar> hermitized(const ComplexMatrix<Scalar>& a) {
  return ((a + a.adjoint()) / Scalar(2)).eval();
}

template <typename Scalar>
Scalar min_eigenvalue(const ComplexMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <typename Scalar>
Scalar spectral_norm_hermitian(const ComplexMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Symmetrize and clamp slightly negative eigenvalues (quadrature round-off)
/// to zero. Eigenvalues below `reject_below` indicate a real modeling error
/// and raise NumericalError instead of being masked.
template <typename Scalar>
ComplexMatrix<Scalar> psd_repaired(const ComplexMatrix<Scalar>& a,
                                   Scalar reject_below = Scalar(-1e-10),
                                   const std::string& what = "matrix") {
  ComplexMatrix<Scalar> h = hermitized(a);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(h);
  RealVector<Scalar> vals = es.eigenvalues();
  if (vals.minCoeff() < reject_below)
    throw NumericalError(what + ": minimum eigenvalue " + std::to_string((double)vals.minCoeff()) +
                         " below the PSD repair threshold");
  if (vals.minCoeff() >= Scalar(0)) return h;
  vals = vals.cwiseMax(Scalar(0));
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues are clamped
/// at zero before the square root.
template <typename Scalar>
ComplexMatrix<Scalar> hermitian_sqrt(const ComplexMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(hermitized(a));
  RealVector<Scalar> vals = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

/// log(det(A)) for Hermitian positive definite A, via Cholesky.
template <typename Scalar>
Scalar logdet_hermitian_pd(const ComplexMatrix<Scalar>& a, const std::string& what = "matrix") {
  Eigen::LLT<ComplexMatrix<Scalar>> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(what + ": Cholesky failed, matrix is not positive definite");
  return Scalar(2) * llt.matrixLLT().diagonal().real().array().log().sum();
}

/// tr(A * B) without forming the product.
template <typename Scalar>
std::complex<Scalar> trace_of_product(const ComplexMatrix<Scalar>& a,
                                      const ComplexMatrix<Scalar>& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

}  // namespace deteq
