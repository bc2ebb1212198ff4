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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "deteq/experiment.hpp"
#include "deteq/scenario.hpp"
#include "../support/oracles.hpp"

using deteq::FadingKind;
using deteq::ScenarioConfig;

namespace {

nlohmann::json minimal_scenario() {
  return nlohmann::json::parse(R"({
    "dims": {"N_per_set": [1], "n_per_user": [1]},
    "links": [{"l":1, "k":1, "theta_r":0, "delta_r":30, "theta_t":0, "delta_t":30,
               "kappa":0, "g":1.0}]
  })");
}

nlohmann::json two_by_two_scenario() {
  nlohmann::json j;
  j["dims"] = {{"N_per_set", {2, 2}}, {"n_per_user", {2, 2}}};
  j["links"] = nlohmann::json::array();
  for (int l = 1; l <= 2; ++l)
    for (int k = 1; k <= 2; ++k)
      j["links"].push_back({{"l", l},
                            {"k", k},
                            {"theta_r", 10.0 * l},
                            {"delta_r", 0.5},
                            {"theta_t", 10.0 * k},
                            {"delta_t", 0.5},
                            {"kappa", 1.0},
                            {"g", l == k ? 1.0 : 0.25}});
  j["quadrature_points"] = 1201;
  return j;
}

}  // namespace

TEST_CASE("scenario: minimal config parses and builds the scalar model") {
  const auto cfg = ScenarioConfig::from_json(minimal_scenario());
  const auto model = cfg.build_model<double>();
  CHECK(model.dims.total_bs() == 1);
  CHECK(model.R[0][0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("scenario: missing link is named in the error") {
  auto j = two_by_two_scenario();
  j["links"].erase(2);  // removes link (2,1)
  try {
    ScenarioConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const deteq::ConfigError& e) {
    CHECK(std::string(e.what()).find("link (2,1) missing") != std::string::npos);
  }
}

TEST_CASE("scenario: duplicate link and contradictory dims rejected") {
  auto j = two_by_two_scenario();
  j["links"].push_back(j["links"][0]);
  CHECK_THROWS_AS(ScenarioConfig::from_json(j), deteq::ConfigError);

  auto j2 = two_by_two_scenario();
  j2["dims"]["L"] = 3;
  CHECK_THROWS_AS(ScenarioConfig::from_json(j2), deteq::ConfigError);
}

TEST_CASE("scenario: malformed file and missing file produce config errors") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "deteq_scenario_test";
  fs::create_directories(dir);
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(ScenarioConfig::from_json_file(bad.string()), deteq::ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::from_json_file((dir / "absent.json").string()),
                  deteq::ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("sweep: rows are deterministic and CSV is byte-stable across thread counts") {
  const auto cfg = ScenarioConfig::from_json(two_by_two_scenario());
  deteq::SweepOptions opt;
  opt.snr_db = {-5.0, 0.0, 5.0};
  opt.fading = FadingKind::rayleigh();
  opt.samples = 300;
  opt.seed = 42;
  opt.threads = 1;
  const auto csv1 = deteq::sweep_rows_to_csv(deteq::run_sweep(cfg, opt));
  opt.threads = 4;
  const auto csv2 = deteq::sweep_rows_to_csv(deteq::run_sweep(cfg, opt));
  CHECK(csv1 == csv2);
  CHECK(csv1.substr(0, csv1.find('\n')) == deteq::kSweepCsvHeader);

  // One row per SNR, in input order.
  const auto rows = deteq::run_sweep(cfg, opt);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].snr_db == -5.0);
  CHECK(rows[2].snr_db == 5.0);
  CHECK(rows[1].sigma2 == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& r : rows) {
    CHECK(r.wall_ms == 0);  // timing is opt-in
    CHECK(std::abs(r.v17a - r.v17b) < 1e-8);
    CHECK(r.fp_iterations > 0);
  }
}

TEST_CASE("sweep: empty SNR list rejected") {
  const auto cfg = ScenarioConfig::from_json(minimal_scenario());
  deteq::SweepOptions opt;
  CHECK_THROWS_AS(deteq::run_sweep(cfg, opt), deteq::ConfigError);
}

TEST_CASE("atomic write: no temporary file left behind, content intact") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "deteq_atomic_test";
  fs::create_directories(dir);
  const auto path = (dir / "out.csv").string();
  deteq::write_file_atomic(path, "a,b\n1,2\n");
  CHECK(!fs::exists(path + ".tmp"));
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "a,b\n1,2\n");
  CHECK_THROWS_AS(deteq::write_file_atomic((dir / "no_dir" / "x.csv").string(), "x"),
                  deteq::IoError);
  fs::remove_all(dir);
}

TEST_CASE("optimize runner: report fields are consistent") {
  const auto cfg = ScenarioConfig::from_json(two_by_two_scenario());
  deteq::OptimizeOptions opt;
  opt.snr_db = 0.0;
  opt.mc_validate = true;
  opt.samples = 200;
  opt.seed = 3;
  const auto report = deteq::run_optimize(cfg, opt);
  CHECK(report.sigma2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(report.v_optimized >= report.v_identity - 1e-9);
  CHECK(report.kkt >= 0.0);
  REQUIRE(report.mc_at_q_star.has_value());
  CHECK(report.mc_at_q_star->samples == 200);

  const auto json_text = deteq::optimize_report_to_json(report);
  const auto parsed = nlohmann::json::parse(json_text);
  CHECK(parsed["v_optimized"].get<double>() == doctest::Approx(report.v_optimized));
  CHECK(parsed["Q_star"].size() == 2);
}

TEST_CASE("fading kinds: parse and canonical names round-trip") {
  CHECK(FadingKind::parse("gaussian").name() == "gaussian");
  CHECK(FadingKind::parse("rayleigh").name() == "rayleigh");
  CHECK(FadingKind::parse("nakagami:0.5").name() == "nakagami:0.5");
  CHECK(FadingKind::parse("lognormal:0.5").name() == "lognormal:0.5");
  CHECK_THROWS_AS(FadingKind::parse("weibull"), deteq::ConfigError);
  CHECK_THROWS_AS(FadingKind::parse("nakagami"), deteq::ConfigError);
  CHECK_THROWS_AS(FadingKind::parse("nakagami:x"), deteq::ConfigError);
  CHECK_THROWS_AS(FadingKind::parse("nakagami:-1"), deteq::ConfigError);
}
