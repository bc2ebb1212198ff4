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
#include <random>
#include <string>

#include "deteq/types.hpp"

namespace deteq {

/// Entry distributions for the random channel component. All variants are
/// scaled so entries have zero mean, unit second moment, and independent
/// real/imaginary parts.
///
/// The non-Gaussian variants draw X = W_R cos(t_R) + i W_I sin(t_I) with
/// uniform phases on [0, 2pi) and amplitude laws normalized to E{W^2} = 1:
/// Rayleigh scale 1/sqrt(2), Nakagami spread 1, log-normal mean-log -sigma_z^2.
struct FadingKind {
  enum class Family { Gaussian, RayleighPhase, NakagamiPhase, LogNormalPhase };

  Family family = Family::Gaussian;
  double param = 0.0;  // Nakagami shape m, or log-normal sigma_z

  static FadingKind gaussian() { return {Family::Gaussian, 0.0}; }
  static FadingKind rayleigh() { return {Family::RayleighPhase, 0.0}; }
  static FadingKind nakagami(double m) {
    if (m <= 0.0) throw ConfigError("FadingKind: Nakagami shape must be > 0");
    return {Family::NakagamiPhase, m};
  }
  static FadingKind lognormal(double sigma_z) {
    if (sigma_z <= 0.0) throw ConfigError("FadingKind: log-normal sigma_z must be > 0");
    return {Family::LogNormalPhase, sigma_z};
  }

  std::string name() const {
    switch (family) {
      case Family::Gaussian:
        return "gaussian";
      case Family::RayleighPhase:
        return "rayleigh";
      case Family::NakagamiPhase:
        return "nakagami:" + format_param(param);
      case Family::LogNormalPhase:
        return "lognormal:" + format_param(param);
    }
    return "?";
  }

  /// Parse "gaussian", "rayleigh", "nakagami:M", "lognormal:SIGMA".
  static FadingKind parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const bool has_param = colon != std::string::npos;
    const auto param_of = [&]() -> double {
      if (!has_param) throw ConfigError("fading '" + head + "' requires a parameter, e.g. '" +
                                        head + ":0.5'");
      try {
        return std::stod(text.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("fading parameter in '" + text + "' is not a number");
      }
    };
    if (head == "gaussian") return gaussian();
    if (head == "rayleigh") return rayleigh();
    if (head == "nakagami") return nakagami(param_of());
    if (head == "lognormal") return lognormal(param_of());
    throw ConfigError("unknown fading kind '" + head +
                      "' (expected gaussian, rayleigh, nakagami:M, lognormal:SIGMA)");
  }

 private:
  static std::string format_param(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
};

namespace detail {

template <typename Scalar>
Scalar draw_amplitude(const FadingKind& kind, std::mt19937_64& gen) {
  switch (kind.family) {
    case FadingKind::Family::RayleighPhase: {
      // W^2 ~ Exp(1) gives a Rayleigh amplitude with E{W^2} = 1.
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double u = unif(gen);
      while (u <= 0.0) u = unif(gen);
      return static_cast<Scalar>(std::sqrt(-std::log(u)));
    }
    case FadingKind::Family::NakagamiPhase: {
      std::gamma_distribution<double> gamma(kind.param, 1.0 / kind.param);
      return static_cast<Scalar>(std::sqrt(gamma(gen)));
    }
    case FadingKind::Family::LogNormalPhase: {
      const double sz = kind.param;
      std::lognormal_distribution<double> logn(-sz * sz, sz);
      return static_cast<Scalar>(logn(gen));
    }
    case FadingKind::Family::Gaussian:
      break;
  }
  return Scalar(0);
}

}  // namespace detail

/// Draw one zero-mean, unit-second-moment complex entry.
template <typename Scalar>
std::complex<Scalar> draw_unit_entry(const FadingKind& kind, std::mt19937_64& gen) {
  if (kind.family == FadingKind::Family::Gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double re = normal(gen);
    const double im = normal(gen);
    constexpr double inv_sqrt2 = 0.7071067811865476;
    return {static_cast<Scalar>(re * inv_sqrt2), static_cast<Scalar>(im * inv_sqrt2)};
  }
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const Scalar w_re = detail::draw_amplitude<Scalar>(kind, gen);
  const Scalar t_re = static_cast<Scalar>(phase(gen));
  const Scalar w_im = detail::draw_amplitude<Scalar>(kind, gen);
  const Scalar t_im = static_cast<Scalar>(phase(gen));
  return {w_re * std::cos(t_re), w_im * std::sin(t_im)};
}

/// Fill a matrix with i.i.d. unit-second-moment entries, column-major order.
template <typename Scalar>
void fill_iid_unit(ComplexMatrix<Scalar>& x, const FadingKind& kind, std::mt19937_64& gen) {
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) x(i, j) = draw_unit_entry<Scalar>(kind, gen);
}

}  // namespace deteq
