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
//
// Black-box tests of the command-line tool: exit codes, output files,
// byte-stable sweeps. The binary path and config directory come in via
// compile definitions.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code;
  std::string output;  // combined stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string out_file =
      (fs::temp_directory_path() / ("deteq_cli_out_" + std::to_string(std::rand()) + ".txt"))
          .string();
  const std::string cmd = std::string(DETEQ_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  fs::remove(out_file);
  return result;
}

std::string config_path(const std::string& name) {
  return (fs::path(DETEQ_CONFIG_DIR) / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("deteq_cli_" + std::to_string(std::rand()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli solve: scalar config prints the fixed point") {
  const auto r = run_cli("solve --config " + config_path("scalar.json") + " --omega 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0.618034") != std::string::npos);
  CHECK(r.output.find("stieltjes") != std::string::npos);
}

TEST_CASE("cli solve: negative omega exits 2 with a domain message") {
  const auto r = run_cli("solve --config " + config_path("scalar.json") + " --omega -1");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("omega") != std::string::npos);
}

TEST_CASE("cli solve: missing link named, exit 2") {
  TempDir dir;
  const auto broken = dir.path / "broken.json";
  std::ofstream(broken) << R"({
    "dims": {"N_per_set": [2,2], "n_per_user": [2,2]},
    "links": [
      {"l":1,"k":1,"theta_r":10,"delta_r":0.5,"theta_t":15,"delta_t":0.5,"kappa":0,"g":1},
      {"l":1,"k":2,"theta_r":30,"delta_r":0.5,"theta_t":35,"delta_t":0.5,"kappa":0,"g":0.25},
      {"l":2,"k":2,"theta_r":40,"delta_r":0.5,"theta_t":45,"delta_t":0.5,"kappa":0,"g":1}
    ]
  })";
  const auto r = run_cli("solve --config " + broken.string() + " --omega 1");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("link (2,1) missing") != std::string::npos);
}

TEST_CASE("cli solve: iteration cap exits 3 with the residual") {
  TempDir dir;
  const auto slow = dir.path / "slow.json";
  std::ofstream(slow) << R"({
    "dims": {"N_per_set": [2,2], "n_per_user": [2,2]},
    "links": [
      {"l":1,"k":1,"theta_r":10,"delta_r":0.5,"theta_t":15,"delta_t":0.5,"kappa":1,"g":1},
      {"l":1,"k":2,"theta_r":30,"delta_r":0.5,"theta_t":35,"delta_t":0.5,"kappa":1,"g":0.25},
      {"l":2,"k":1,"theta_r":20,"delta_r":0.5,"theta_t":25,"delta_t":0.5,"kappa":1,"g":0.25},
      {"l":2,"k":2,"theta_r":40,"delta_r":0.5,"theta_t":45,"delta_t":0.5,"kappa":1,"g":1}
    ],
    "solver": {"max_iterations": 2},
    "quadrature_points": 1201
  })";
  const auto r = run_cli("solve --config " + slow.string() + " --omega 1");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("converge") != std::string::npos);
}

TEST_CASE("cli sweep: byte-identical CSV across runs, correct schema") {
  TempDir dir;
  const auto csv_a = (dir.path / "a.csv").string();
  const auto csv_b = (dir.path / "b.csv").string();
  const std::string base = "sweep --config " + config_path("twocell_n2_kappa1.json") +
                           " --snr-db -10,-5,0,5,10,15,20,25,30 --fading rayleigh"
                           " --samples 500 --seed 7 ";
  CHECK(run_cli(base + "--out " + csv_a).exit_code == 0);
  CHECK(run_cli(base + "--out " + csv_b + " --threads 1").exit_code == 0);
  const std::string a = read_file(csv_a), b = read_file(csv_b);
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) ==
        "snr_db,sigma2,v_det,v17a,v17b,v_mc_mean,v_mc_stderr,fading,samples,fp_iterations,wall_ms");
  // Header plus 9 rows.
  CHECK(std::count(a.begin(), a.end(), '\n') == 10);
  CHECK(!fs::exists(csv_a + ".tmp"));
}

TEST_CASE("cli sweep: empty SNR list exits 2, unwritable path exits 4") {
  TempDir dir;
  const auto r_empty = run_cli("sweep --config " + config_path("scalar.json") +
                               " --snr-db , --samples 10 --seed 1 --out " +
                               (dir.path / "x.csv").string());
  CHECK(r_empty.exit_code == 2);
  const auto r_io = run_cli("sweep --config " + config_path("scalar.json") +
                            " --snr-db 0 --samples 10 --seed 1 --out " +
                            (dir.path / "missing_dir" / "x.csv").string());
  CHECK(r_io.exit_code == 4);
}

TEST_CASE("cli sweep: unknown fading exits 2") {
  TempDir dir;
  const auto r = run_cli("sweep --config " + config_path("scalar.json") +
                         " --snr-db 0 --fading weibull --samples 10 --seed 1 --out " +
                         (dir.path / "x.csv").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("fading") != std::string::npos);
}

TEST_CASE("cli optimize: report written with rates and KKT residual") {
  TempDir dir;
  const auto out = (dir.path / "report.json").string();
  const auto r = run_cli("optimize --config " + config_path("twocell_n2_kappa1.json") +
                         " --snr-db 0 --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("rate at identity Q") != std::string::npos);
  CHECK(r.output.find("rate at optimized Q") != std::string::npos);
  CHECK(r.output.find("kkt residual") != std::string::npos);
  const std::string report = read_file(out);
  CHECK(report.find("\"v_optimized\"") != std::string::npos);
  CHECK(report.find("\"Q_star\"") != std::string::npos);
  CHECK(report.find("\"terminated_reason\"") != std::string::npos);
}

TEST_CASE("cli: missing subcommand or unknown flag exits 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("solve --config nope.json").exit_code == 2);   // missing --omega
  CHECK(run_cli("frobnicate --config x").exit_code == 2);
}
