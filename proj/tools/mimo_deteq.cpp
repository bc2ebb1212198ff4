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

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deteq/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

int cmd_solve(const std::string& config_path, double omega) {
  const auto scenario = deteq::ScenarioConfig::from_json_file(config_path);
  if (omega <= 0.0) throw deteq::ConfigError("--omega must be > 0");
  const auto model = scenario.build_model<double>();
  const auto sol = deteq::solve_fixed_point<double>(model, scenario.solver_config(omega));

  std::printf("fixed point at omega = %s (%d sweeps, residual %.3e)\n",
              deteq::format_double(omega).c_str(), sol.iterations_used, (double)sol.residual);
  std::printf("%4s %4s %18s %18s\n", "l", "k", "e", "e_tilde");
  for (int l = 0; l < model.dims.sets(); ++l)
    for (int k = 0; k < model.dims.users(); ++k)
      std::printf("%4d %4d %18.12f %18.12f\n", l + 1, k + 1, sol.e(l, k), sol.e_tilde(l, k));
  std::printf("stieltjes tr(Psi)/N = %.12f\n", deteq::deterministic_stieltjes(sol));
  return kExitOk;
}

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw deteq::ConfigError("--snr-db: '" + tok + "' is not a number");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw deteq::ConfigError("--snr-db: empty SNR list");
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& snr_list,
              const std::string& fading, std::int64_t samples, std::uint64_t seed,
              const std::string& out_path, bool timing, int threads) {
  const auto scenario = deteq::ScenarioConfig::from_json_file(config_path);
  deteq::SweepOptions opt;
  opt.snr_db = parse_snr_list(snr_list);
  opt.fading = deteq::FadingKind::parse(fading);
  opt.samples = samples;
  opt.seed = seed;
  opt.timing = timing;
  opt.threads = threads;
  const auto rows = deteq::run_sweep(scenario, opt);
  deteq::write_file_atomic(out_path, deteq::sweep_rows_to_csv(rows));
  std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), out_path.c_str());
  return kExitOk;
}

int cmd_optimize(const std::string& config_path, double snr_db, const std::string& out_path,
                 bool mc_validate, const std::string& fading, std::int64_t samples,
                 std::uint64_t seed) {
  const auto scenario = deteq::ScenarioConfig::from_json_file(config_path);
  deteq::OptimizeOptions opt;
  opt.snr_db = snr_db;
  opt.mc_validate = mc_validate;
  opt.fading = deteq::FadingKind::parse(fading);
  opt.samples = samples;
  opt.seed = seed;
  const auto report = deteq::run_optimize(scenario, opt);
  deteq::write_file_atomic(out_path, deteq::optimize_report_to_json(report));

  std::printf("sigma2 = %s\n", deteq::format_double(report.sigma2).c_str());
  std::printf("rate at identity Q  = %.9f nats/antenna\n", report.v_identity);
  std::printf("rate at optimized Q = %.9f nats/antenna\n", report.v_optimized);
  std::printf("kkt residual = %.3e, %s after %d iterations\n", report.kkt,
              report.terminated_reason.c_str(), report.iterations);
  if (report.mc_at_q_star)
    std::printf("mc rate at Q* = %.9f (stderr %.2e, %lld samples)\n", report.mc_at_q_star->mean,
                report.mc_at_q_star->std_error,
                static_cast<long long>(report.mc_at_q_star->samples));
  std::printf("report written to %s\n", out_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic-equivalent rate analysis for large-scale MIMO MACs"};
  app.require_subcommand(1);

  std::string config_path, out_path, fading = "rayleigh", snr_list;
  double omega = 1.0, snr_db = 0.0;
  std::int64_t samples = 10000;
  std::uint64_t seed = 1;
  bool timing = false, mc_validate = false;
  int threads = 0;

  auto* solve = app.add_subcommand("solve", "solve the fixed point at a given omega");
  solve->add_option("--config", config_path, "scenario config (JSON)")->required();
  solve->add_option("--omega", omega, "evaluation point, > 0")->required();

  auto* sweep = app.add_subcommand("sweep", "deterministic vs Monte-Carlo rate over an SNR grid");
  sweep->add_option("--config", config_path, "scenario config (JSON)")->required();
  sweep->add_option("--snr-db", snr_list, "comma-separated SNR list in dB")->required();
  sweep->add_option("--fading", fading, "gaussian|rayleigh|nakagami:M|lognormal:S");
  sweep->add_option("--samples", samples, "Monte-Carlo draws per SNR point");
  sweep->add_option("--seed", seed, "base seed for the per-sample streams");
  sweep->add_option("--out", out_path, "output CSV path")->required();
  sweep->add_flag("--timing", timing, "record real per-row wall time (breaks byte-stable output)");
  sweep->add_option("--threads", threads, "worker cap (0 = MIMO_DETEQ_THREADS or auto)");

  auto* optimize = app.add_subcommand("optimize", "water-filling covariance optimization");
  optimize->add_option("--config", config_path, "scenario config (JSON)")->required();
  optimize->add_option("--snr-db", snr_db, "SNR in dB")->required();
  optimize->add_option("--out", out_path, "output report path (JSON)")->required();
  optimize->add_flag("--mc-validate", mc_validate, "also estimate the Monte-Carlo rate at Q*");
  optimize->add_option("--fading", fading, "fading kind for --mc-validate");
  optimize->add_option("--samples", samples, "Monte-Carlo draws for --mc-validate");
  optimize->add_option("--seed", seed, "seed for --mc-validate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(config_path, omega);
    if (sweep->parsed())
      return cmd_sweep(config_path, snr_list, fading, samples, seed, out_path, timing, threads);
    if (optimize->parsed())
      return cmd_optimize(config_path, snr_db, out_path, mc_validate, fading, samples, seed);
  } catch (const deteq::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const deteq::ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const deteq::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const deteq::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
