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

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deteq/channel.hpp"
#include "deteq/fixed_point.hpp"
#include "deteq/types.hpp"

namespace deteq {

/// One experiment scenario: antenna layout, per-link propagation
/// parameters, solver settings, and the quadrature resolution for the
/// correlation integrals. Link indices in the file are 1-based.
///
/// JSON schema:
///   {
///     "dims":  { "N_per_set": [2,2], "n_per_user": [2,2] },
///     "links": [ { "l":1, "k":1, "theta_r":10, "delta_r":0.01,
///                  "theta_t":15, "delta_t":0.04,
///                  "theta_bar_r":10, "theta_bar_t":40,
///                  "kappa":1.0, "g":1.0 }, ... ],
///     "solver": { "tolerance":1e-12, "max_iterations":10000, "damping":1.0 },
///     "quadrature_points": 7201
///   }
/// "solver" and "quadrature_points" are optional; every (l,k) pair must
/// appear exactly once in "links".
struct ScenarioConfig {
  SystemDims dims;
  std::vector<std::vector<LinkSpec>> links;  // [l][k], 0-based
  double solver_tolerance = 1e-12;
  int solver_max_iterations = 10000;
  double solver_damping = 1.0;
  int quadrature_points = 7201;

  SolverConfig solver_config(double omega) const {
    SolverConfig cfg;
    cfg.omega = omega;
    cfg.tolerance = solver_tolerance;
    cfg.max_iterations = solver_max_iterations;
    cfg.damping = solver_damping;
    return cfg;
  }

  template <typename Scalar>
  ChannelModel<Scalar> build_model() const {
    return assemble_model<Scalar>(dims, links, quadrature_points);
  }

  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig from_json_file(const std::string& path);
};

inline ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  using nlohmann::json;
  ScenarioConfig cfg;
  try {
    if (!j.contains("dims")) throw ConfigError("config: missing \"dims\" object");
    const json& dims = j.at("dims");
    if (!dims.contains("N_per_set") || !dims.contains("n_per_user"))
      throw ConfigError("config: \"dims\" needs \"N_per_set\" and \"n_per_user\" arrays");
    cfg.dims.bs_antennas = dims.at("N_per_set").get<std::vector<int>>();
    cfg.dims.ue_antennas = dims.at("n_per_user").get<std::vector<int>>();
    cfg.dims.validate();
    if (dims.contains("L") && dims.at("L").get<int>() != cfg.dims.sets())
      throw ConfigError("config: \"L\" contradicts the length of \"N_per_set\"");
    if (dims.contains("K") && dims.at("K").get<int>() != cfg.dims.users())
      throw ConfigError("config: \"K\" contradicts the length of \"n_per_user\"");

    const int L = cfg.dims.sets(), K = cfg.dims.users();
    cfg.links.assign(L, std::vector<LinkSpec>(K));
    std::vector<std::vector<bool>> seen(L, std::vector<bool>(K, false));
    if (!j.contains("links")) throw ConfigError("config: missing \"links\" array");
    for (const json& entry : j.at("links")) {
      if (!entry.contains("l") || !entry.contains("k"))
        throw ConfigError("config: every link entry needs \"l\" and \"k\"");
      const int l = entry.at("l").get<int>(), k = entry.at("k").get<int>();
      if (l < 1 || l > L || k < 1 || k > K)
        throw ConfigError("config: link (" + std::to_string(l) + "," + std::to_string(k) +
                          ") is out of range");
      if (seen[l - 1][k - 1])
        throw ConfigError("config: link (" + std::to_string(l) + "," + std::to_string(k) +
                          ") specified twice");
      seen[l - 1][k - 1] = true;
      LinkSpec& spec = cfg.links[l - 1][k - 1];
      const auto opt = [&](const char* key, double fallback) {
        return entry.contains(key) ? entry.at(key).get<double>() : fallback;
      };
      spec.theta_r_deg = opt("theta_r", 0.0);
      spec.delta_r = opt("delta_r", 0.1);
      spec.theta_t_deg = opt("theta_t", 0.0);
      spec.delta_t = opt("delta_t", 0.1);
      spec.theta_bar_r_deg = opt("theta_bar_r", 0.0);
      spec.theta_bar_t_deg = opt("theta_bar_t", 0.0);
      spec.kappa = opt("kappa", 0.0);
      spec.g = opt("g", 1.0);
      spec.validate();
    }
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        if (!seen[l][k])
          throw ConfigError("config: link (" + std::to_string(l + 1) + "," +
                            std::to_string(k + 1) + ") missing");

    if (j.contains("solver")) {
      const json& s = j.at("solver");
      if (s.contains("tolerance")) cfg.solver_tolerance = s.at("tolerance").get<double>();
      if (s.contains("max_iterations"))
        cfg.solver_max_iterations = s.at("max_iterations").get<int>();
      if (s.contains("damping")) cfg.solver_damping = s.at("damping").get<double>();
    }
    if (j.contains("quadrature_points"))
      cfg.quadrature_points = j.at("quadrature_points").get<int>();
    cfg.solver_config(1.0).validate();
    if (cfg.quadrature_points < 201 || cfg.quadrature_points % 2 == 0)
      throw ConfigError("config: quadrature_points must be odd and >= 201");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace deteq
