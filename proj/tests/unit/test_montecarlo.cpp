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

#include <cstdlib>

#include "deteq/fixed_point.hpp"
#include "deteq/montecarlo.hpp"
#include "../support/oracles.hpp"
#include "../support/scenarios.hpp"

using deteq::FadingKind;
using deteq::McConfig;
using deteq::McEstimate;

TEST_CASE("mc rate: scalar Gaussian channel matches the exponential-integral value") {
  McConfig<double> cfg;
  cfg.samples = 100000;
  cfg.seed = 2;
  cfg.fading = FadingKind::gaussian();
  cfg.point = 1.0;
  const auto est = deteq::ergodic_sum_rate_mc(scenarios::scalar_unit(), cfg);
  CHECK(std::abs(est.mean - oracles::kExpIntegralUnit) < 3.0 * est.std_error);
}

TEST_CASE("mc rate: vanishes at huge noise") {
  McConfig<double> cfg;
  cfg.samples = 200;
  cfg.seed = 3;
  cfg.point = 1e9;
  const auto est = deteq::ergodic_sum_rate_mc(scenarios::twocell(2, 1.0, 1201), cfg);
  CHECK(est.mean <= 1e-6);
}

TEST_CASE("mc stieltjes: scalar Gaussian channel, same closed form") {
  McConfig<double> cfg;
  cfg.samples = 100000;
  cfg.seed = 4;
  cfg.fading = FadingKind::gaussian();
  cfg.point = 1.0;
  const auto est = deteq::empirical_stieltjes_mc(scenarios::scalar_unit(), cfg);
  CHECK(std::abs(est.mean - oracles::kExpIntegralUnit) < 3.0 * est.std_error);
}

TEST_CASE("mc stieltjes: resolvent expansion at large omega") {
  const auto model = scenarios::twocell(2, 1.0, 1201);
  McConfig<double> cfg;
  cfg.samples = 2000;
  cfg.seed = 5;
  cfg.point = 1e6;
  const auto est = deteq::empirical_stieltjes_mc(model, cfg);
  // First-order expansion 1/w - E{tr B}/(N w^2) with E{tr B} = sum g N_l.
  double trace_b = 0.0;
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) trace_b += model.g[l][k] * model.dims.bs_antennas[l];
  const double expansion = 1e-6 - trace_b / (model.dims.total_bs() * 1e12);
  CHECK(est.mean <= 1.0 / 1e6);
  CHECK(std::abs(est.mean - expansion) < 1e-3 * expansion);
}

TEST_CASE("mc stieltjes: close to the deterministic value at moderate size") {
  const auto model = scenarios::identity_model(8, 8);
  McConfig<double> cfg;
  cfg.samples = 10000;
  cfg.seed = 6;
  cfg.point = 1.0;
  const auto est = deteq::empirical_stieltjes_mc(model, cfg);
  CHECK(std::abs(est.mean - oracles::kScalarFixedPoint) < 0.02 * oracles::kScalarFixedPoint);
}

TEST_CASE("mc: bit-identical across thread counts and repeat runs") {
  const auto model = scenarios::twocell(2, 1.0, 1201);
  McConfig<double> cfg;
  cfg.samples = 500;
  cfg.seed = 7;
  cfg.point = 1.0;
  cfg.threads = 1;
  const auto a = deteq::ergodic_sum_rate_mc(model, cfg);
  cfg.threads = 4;
  const auto b = deteq::ergodic_sum_rate_mc(model, cfg);
  cfg.threads = 3;
  const auto c = deteq::ergodic_sum_rate_mc(model, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.mean == c.mean);
  CHECK(a.std_error == c.std_error);
}

TEST_CASE("mc: doubling samples shrinks the standard error by about sqrt(2)") {
  const auto model = scenarios::twocell(2, 0.0, 1201);
  McConfig<double> cfg;
  cfg.samples = 4000;
  cfg.seed = 8;
  cfg.point = 1.0;
  const auto small = deteq::ergodic_sum_rate_mc(model, cfg);
  cfg.samples = 8000;
  const auto large = deteq::ergodic_sum_rate_mc(model, cfg);
  const double ratio = small.std_error / large.std_error;
  CHECK(ratio > 1.25);
  CHECK(ratio < 1.60);
}

TEST_CASE("mc: per-sample values kept on request and reduce to the mean") {
  const auto model = scenarios::scalar_unit();
  McConfig<double> cfg;
  cfg.samples = 100;
  cfg.seed = 9;
  cfg.point = 1.0;
  cfg.keep_per_sample = true;
  const auto est = deteq::ergodic_sum_rate_mc(model, cfg);
  REQUIRE(est.per_sample.size() == 100);
  double sum = 0.0;
  for (double v : est.per_sample) sum += v;
  CHECK(est.mean == doctest::Approx(sum / 100.0).epsilon(1e-15));
}

TEST_CASE("mc: deterministic equivalent error shrinks as dimensions scale") {
  // Gaussian entries at sizes x1, x2, x4 of the two-cell layout; the gap
  // to the deterministic resolvent trace must fall monotonically (up to
  // pooled sampling noise).
  double gaps[3];
  double noise[3];
  int idx = 0;
  for (const int antennas : {2, 4, 8}) {
    const auto model = scenarios::twocell(antennas, 1.0, 1201);
    deteq::SolverConfig cfg;
    cfg.omega = 1.0;
    const double det = deteq::deterministic_stieltjes(deteq::solve_fixed_point(model, cfg));
    McConfig<double> mc;
    mc.samples = 40000;
    mc.seed = 10;
    mc.fading = FadingKind::gaussian();
    mc.point = 1.0;
    const auto est = deteq::empirical_stieltjes_mc(model, mc);
    gaps[idx] = std::abs(est.mean - det);
    noise[idx] = est.std_error;
    ++idx;
  }
  CHECK(gaps[0] > gaps[1] - 3.0 * std::hypot(noise[0], noise[1]));
  CHECK(gaps[1] > gaps[2] - 3.0 * std::hypot(noise[1], noise[2]));
  CHECK(gaps[0] > gaps[2]);
}

TEST_CASE("fading invariance: duplicated kind has zero spread") {
  const auto model = scenarios::twocell(2, 0.0, 1201);
  const auto report = deteq::fading_invariance_report<double>(
      model, 1.0, {FadingKind::rayleigh(), FadingKind::rayleigh()}, 400, 11, 0.6);
  CHECK(report.spread == 0.0);
}

TEST_CASE("fading invariance: small-system report includes the log-normal gap") {
  const auto model = scenarios::twocell(2, 0.0, 1201);
  const double v_det = deteq::deterministic_sum_rate(model, 1.0).v;
  const auto report = deteq::fading_invariance_report<double>(
      model, 1.0,
      {FadingKind::gaussian(), FadingKind::rayleigh(), FadingKind::lognormal(0.5)}, 4000, 12,
      v_det);
  // Report-only at this size: log-normal is allowed to sit farther out.
  CHECK(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.estimate.std_error > 0.0);
    CHECK(row.gap_to_reference >= 0.0);
  }
  CHECK(report.pooled_std_error > 0.0);
  CHECK(report.spread >= 0.0);
}

TEST_CASE("mc: config validation") {
  McConfig<double> cfg;
  cfg.samples = 0;
  CHECK_THROWS_AS(deteq::ergodic_sum_rate_mc(scenarios::scalar_unit(), cfg), deteq::ConfigError);
  cfg.samples = 10;
  cfg.point = -1.0;
  CHECK_THROWS_AS(deteq::ergodic_sum_rate_mc(scenarios::scalar_unit(), cfg), deteq::ConfigError);
}
