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

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "deteq/montecarlo.hpp"
#include "deteq/optimizer.hpp"
#include "deteq/scenario.hpp"

namespace deteq {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Locale-independent shortest round-trip decimal rendering.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Atomic whole-file write: the content lands under a temporary name first
/// and is renamed into place, so readers never observe a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write to '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename temporary file onto '" + path + "'");
  }
}

/// One SNR point of a sweep. sigma2 follows the unit-power convention
/// sigma2 = 10^(-snr_db/10); rates are nats per receive antenna.
struct SweepRow {
  double snr_db = 0;
  double sigma2 = 1;
  double v_det = 0;
  double v17a = 0;
  double v17b = 0;
  double v_mc_mean = 0;
  double v_mc_stderr = 0;
  std::string fading;
  std::int64_t samples = 0;
  int fp_iterations = 0;
  std::int64_t wall_ms = 0;
};

inline constexpr const char* kSweepCsvHeader =
    "snr_db,sigma2,v_det,v17a,v17b,v_mc_mean,v_mc_stderr,fading,samples,fp_iterations,wall_ms";

struct SweepOptions {
  std::vector<double> snr_db;
  FadingKind fading = FadingKind::rayleigh();
  std::int64_t samples = 10000;
  std::uint64_t seed = 1;
  int threads = 0;      // 0: MIMO_DETEQ_THREADS / hardware
  bool timing = false;  // real wall_ms breaks byte-stable output; opt-in only
};

/// Deterministic rate + Monte-Carlo validation per SNR point. Rows come
/// back in the order the SNR values were given. With `timing` off (the
/// default) wall_ms is written as 0 so repeated runs emit byte-identical
/// CSV regardless of worker count.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& scenario, const SweepOptions& opt) {
  if (opt.snr_db.empty()) throw ConfigError("sweep: SNR list must not be empty");
  if (opt.samples < 1) throw ConfigError("sweep: samples must be >= 1");

  const ChannelModel<double> model = scenario.build_model<double>();
  std::vector<SweepRow> rows;
  rows.reserve(opt.snr_db.size());
  for (const double snr_db : opt.snr_db) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepRow row;
    row.snr_db = snr_db;
    row.sigma2 = std::pow(10.0, -snr_db / 10.0);
    const SumRateResult<double> det =
        deterministic_sum_rate<double>(model, row.sigma2, scenario.solver_config(row.sigma2));
    row.v_det = det.v;
    row.v17a = det.v17a;
    row.v17b = det.v17b;
    row.fp_iterations = det.solution.iterations_used;

    McConfig<double> mc;
    mc.samples = opt.samples;
    mc.seed = opt.seed;
    mc.fading = opt.fading;
    mc.point = row.sigma2;
    mc.threads = opt.threads;
    const McEstimate<double> est = ergodic_sum_rate_mc(model, mc);
    row.v_mc_mean = est.mean;
    row.v_mc_stderr = est.std_error;
    row.fading = opt.fading.name();
    row.samples = opt.samples;
    if (opt.timing)
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string sweep_rows_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const SweepRow& r : rows) {
    out += format_double(r.snr_db);
    out += ',';
    out += format_double(r.sigma2);
    out += ',';
    out += format_double(r.v_det);
    out += ',';
    out += format_double(r.v17a);
    out += ',';
    out += format_double(r.v17b);
    out += ',';
    out += format_double(r.v_mc_mean);
    out += ',';
    out += format_double(r.v_mc_stderr);
    out += ',';
    out += r.fading;
    out += ',';
    out += std::to_string(r.samples);
    out += ',';
    out += std::to_string(r.fp_iterations);
    out += ',';
    out += std::to_string(r.wall_ms);
    out += '\n';
  }
  return out;
}

struct OptimizeOptions {
  double snr_db = 0;
  double stop_threshold = 1e-8;
  int max_outer = 500;
  bool mc_validate = false;
  FadingKind fading = FadingKind::rayleigh();
  std::int64_t samples = 10000;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct OptimizeReport {
  double snr_db = 0;
  double sigma2 = 1;
  double v_identity = 0;
  double v_optimized = 0;
  double kkt = 0;
  std::string terminated_reason;
  int iterations = 0;
  double final_delta_v = 0;
  InputCovariances<double> Q_star;
  std::optional<McEstimate<double>> mc_at_q_star;
};

inline OptimizeReport run_optimize(const ScenarioConfig& scenario, const OptimizeOptions& opt) {
  OptimizeReport report;
  report.snr_db = opt.snr_db;
  report.sigma2 = std::pow(10.0, -opt.snr_db / 10.0);

  const ChannelModel<double> model = scenario.build_model<double>();
  const SolverConfig inner = scenario.solver_config(report.sigma2);
  report.v_identity = deterministic_sum_rate_with_covariances<double>(
                          model, report.sigma2, InputCovariances<double>::identity(model.dims),
                          inner)
                          .v;
  IwfResult<double> iwf =
      iterative_waterfilling<double>(model, report.sigma2, opt.stop_threshold, opt.max_outer, inner);
  report.v_optimized = iwf.v_star;
  report.terminated_reason = iwf.trace.terminated_reason;
  report.iterations = static_cast<int>(iwf.trace.rows.size());
  report.final_delta_v = iwf.trace.final_delta_v;
  report.kkt = kkt_residual<double>(model, report.sigma2, iwf.Q_star, inner);
  report.Q_star = std::move(iwf.Q_star);

  if (opt.mc_validate) {
    McConfig<double> mc;
    mc.samples = opt.samples;
    mc.seed = opt.seed;
    mc.fading = opt.fading;
    mc.point = report.sigma2;
    mc.threads = opt.threads;
    mc.Q = report.Q_star;
    report.mc_at_q_star = ergodic_sum_rate_mc(model, mc);
  }
  return report;
}

inline std::string optimize_report_to_json(const OptimizeReport& report) {
  nlohmann::json j;
  j["snr_db"] = report.snr_db;
  j["sigma2"] = report.sigma2;
  j["v_identity"] = report.v_identity;
  j["v_optimized"] = report.v_optimized;
  j["kkt_residual"] = report.kkt;
  j["terminated_reason"] = report.terminated_reason;
  j["iterations"] = report.iterations;
  j["final_delta_v"] = report.final_delta_v;
  nlohmann::json qs = nlohmann::json::array();
  for (std::size_t k = 0; k < report.Q_star.Q.size(); ++k) {
    const auto& q = report.Q_star.Q[k];
    nlohmann::json qk;
    qk["k"] = k + 1;
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Index i = 0; i < q.rows(); ++i) {
      nlohmann::json re_row = nlohmann::json::array(), im_row = nlohmann::json::array();
      for (Index jcol = 0; jcol < q.cols(); ++jcol) {
        re_row.push_back(q(i, jcol).real());
        im_row.push_back(q(i, jcol).imag());
      }
      re.push_back(re_row);
      im.push_back(im_row);
    }
    qk["real"] = re;
    qk["imag"] = im;
    qk["trace"] = q.trace().real();
    qs.push_back(qk);
  }
  j["Q_star"] = qs;
  if (report.mc_at_q_star) {
    j["mc_at_q_star"] = {{"mean", report.mc_at_q_star->mean},
                         {"std_error", report.mc_at_q_star->std_error},
                         {"samples", report.mc_at_q_star->samples},
                         {"seed", report.mc_at_q_star->seed}};
  }
  return j.dump(2) + "\n";
}

}  // namespace deteq
