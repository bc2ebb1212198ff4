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

#include <doctest.h>

#include <random>

#include "deteq/waterfill.hpp"
#include "../support/oracles.hpp"

using deteq::ComplexMatrix;
using deteq::waterfill_single;

TEST_CASE("waterfill: symmetric modes split the budget equally") {
  const auto r = waterfill_single<double>(ComplexMatrix<double>::Identity(2, 2), 2.0);
  CHECK((r.Q - ComplexMatrix<double>::Identity(2, 2)).norm() < 1e-10);
  CHECK(r.mu == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.active_modes == 2);
}

TEST_CASE("waterfill: two active modes, hand-solved water level") {
  ComplexMatrix<double> p = ComplexMatrix<double>::Zero(2, 2);
  p(0, 0) = 2.0;
  p(1, 1) = 1.0;
  const auto r = waterfill_single<double>(p, 2.0);
  CHECK(r.mu == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(r.Q(0, 0).real() == doctest::Approx(1.25).epsilon(1e-10));
  CHECK(r.Q(1, 1).real() == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(r.active_modes == 2);
}

TEST_CASE("waterfill: weak mode drops out of the active set") {
  ComplexMatrix<double> p = ComplexMatrix<double>::Zero(2, 2);
  p(0, 0) = 10.0;
  p(1, 1) = 0.01;
  const auto r = waterfill_single<double>(p, 2.0);
  CHECK(r.mu == doctest::Approx(1.0 / 2.1).epsilon(1e-12));
  CHECK(r.Q(0, 0).real() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.Q(1, 1).real() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(r.active_modes == 1);
}

TEST_CASE("waterfill: numerically zero gains fall back to uniform power") {
  const auto r = waterfill_single<double>(ComplexMatrix<double>::Zero(3, 3), 3.0);
  CHECK(r.degenerate);
  CHECK((r.Q - ComplexMatrix<double>::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("waterfill: budget binds, output PSD, eigenvalues follow the water level") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + int(gen() % 5);
    const double budget = n;
    const auto p = oracles::random_psd(n, 1.0 + double(gen() % 7), gen);
    const auto r = waterfill_single<double>(p, budget);
    CHECK(r.Q.trace().real() == doctest::Approx(budget).epsilon(1e-9));
    CHECK(deteq::min_eigenvalue<double>(r.Q) > -1e-10);

    Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> es_p(deteq::hermitized<double>(p));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<double>> es_q(r.Q);
    // Q and P share an eigenbasis, so Q's spectrum against P's must follow
    // (1/mu - 1/lambda)^+ mode by mode (both ascending).
    for (int i = 0; i < n; ++i) {
      const double lam = std::max(es_p.eigenvalues()(i), 0.0);
      const double expected = lam > 0.0 ? std::max(1.0 / r.mu - 1.0 / lam, 0.0) : 0.0;
      CHECK(std::abs(es_q.eigenvalues()(i) - expected) < 1e-10);
    }
  }
}

TEST_CASE("waterfill: scaling the gains preserves the eigenbasis, never drops modes") {
  // P and cP share eigenvectors, so the covariances commute with P and
  // with each other. The active set is monotone in the scale: raising all
  // gains can only bring more modes above water. (It is NOT invariant:
  // diag(10, 0.01) has one active mode at budget 2 while 100x that gain
  // matrix has two.)
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3;
    const auto p = oracles::random_psd(n, 5.0, gen);
    const auto a = waterfill_single<double>(p, 3.0);
    const auto b = waterfill_single<double>(ComplexMatrix<double>(4.0 * p), 3.0);
    CHECK(a.active_modes <= b.active_modes);
    CHECK((a.Q * b.Q - b.Q * a.Q).norm() < 1e-9);
    CHECK((a.Q * p - p * a.Q).norm() < 1e-9);
  }
  ComplexMatrix<double> spread = ComplexMatrix<double>::Zero(2, 2);
  spread(0, 0) = 10.0;
  spread(1, 1) = 0.01;
  CHECK(waterfill_single<double>(spread, 2.0).active_modes == 1);
  CHECK(waterfill_single<double>(ComplexMatrix<double>(100.0 * spread), 2.0).active_modes == 2);
}

TEST_CASE("waterfill: bad inputs") {
  CHECK_THROWS_AS(waterfill_single<double>(ComplexMatrix<double>::Identity(2, 2), 0.0),
                  deteq::ConfigError);
  CHECK_THROWS_AS(waterfill_single<double>(ComplexMatrix<double>::Ones(2, 3), 1.0),
                  deteq::ConfigError);
}
