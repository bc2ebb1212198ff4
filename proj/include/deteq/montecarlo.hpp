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
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deteq/channel.hpp"
#include "deteq/fading.hpp"
#include "deteq/numeric.hpp"
#include "deteq/rng.hpp"
#include "deteq/types.hpp"

namespace deteq {

/// Worker count for sampling loops: `requested` wins if positive, else the
/// MIMO_DETEQ_THREADS environment variable, else hardware concurrency.
inline int resolve_thread_count(int requested = 0) {
  int count = requested;
  if (count <= 0) {
    if (const char* env = std::getenv("MIMO_DETEQ_THREADS")) {
      try {
        count = std::stoi(env);
      } catch (const std::exception&) {
        count = 0;
      }
    }
  }
  if (count <= 0) count = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, count);
}

namespace detail {

/// Run fn(i) for i in [0, count) across workers with static chunking. The
/// call order within a worker is ascending, and workers touch disjoint
/// index ranges, so writes to per-index slots never race.
inline void parallel_samples(std::int64_t count, int threads,
                             const std::function<void(std::int64_t)>& fn) {
  threads = std::min<std::int64_t>(std::max(1, threads), std::max<std::int64_t>(1, count));
  if (threads == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = count * t / threads;
    const std::int64_t hi = count * (t + 1) / threads;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

template <typename Scalar>
struct McConfig {
  std::int64_t samples = 10000;
  std::uint64_t seed = 0;
  FadingKind fading = FadingKind::gaussian();
  Scalar point = 1;  // sigma2 for rate estimates, omega for resolvent traces
  std::optional<InputCovariances<Scalar>> Q;  // identity when absent
  bool keep_per_sample = false;
  int threads = 0;  // 0: MIMO_DETEQ_THREADS / hardware

  void validate() const {
    if (samples < 1) throw ConfigError("McConfig: samples must be >= 1");
    if (point <= Scalar(0)) throw ConfigError("McConfig: evaluation point must be > 0");
  }
};

/// Sample statistics of a Monte-Carlo run. Per-sample values are reduced in
/// index order, so the estimate is bit-identical for any worker count.
template <typename Scalar>
struct McEstimate {
  Scalar mean = 0;
  Scalar std_error = 0;  // sample standard deviation / sqrt(samples)
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<Scalar> per_sample;  // kept only on request
};

namespace detail {

template <typename Scalar>
McEstimate<Scalar> reduce_in_index_order(std::vector<Scalar>&& values, const McConfig<Scalar>& cfg) {
  McEstimate<Scalar> est;
  est.samples = cfg.samples;
  est.seed = cfg.seed;
  Scalar sum = 0;
  for (const Scalar v : values) sum += v;
  est.mean = sum / Scalar(values.size());
  if (values.size() > 1) {
    Scalar ss = 0;
    for (const Scalar v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / Scalar(values.size() - 1)) / std::sqrt(Scalar(values.size()));
  }
  if (cfg.keep_per_sample) est.per_sample = std::move(values);
  return est;
}

/// Shared driver: per-sample channel draw -> scalar statistic.
template <typename Scalar, typename Stat>
McEstimate<Scalar> run_mc(const ChannelModel<Scalar>& model, const McConfig<Scalar>& cfg,
                          Stat&& stat) {
  cfg.validate();
  if (cfg.Q) cfg.Q->validate(model.dims);
  const ChannelSampler<Scalar> sampler(model);

  // Fold Q in through the channel: H Q H^H = (H Q^1/2)(H Q^1/2)^H.
  ComplexMatrix<Scalar> q_root;
  if (cfg.Q) {
    const int n = model.dims.total_ue();
    q_root.setZero(n, n);
    for (int k = 0; k < model.dims.users(); ++k) {
      const int nk = model.dims.ue_antennas[k], off = model.dims.ue_offset(k);
      q_root.block(off, off, nk, nk) = hermitian_sqrt(cfg.Q->Q[k]);
    }
  }

  std::vector<Scalar> values(cfg.samples);
  detail::parallel_samples(cfg.samples, resolve_thread_count(cfg.threads),
                           [&](std::int64_t i) {
                             auto gen = make_stream(cfg.seed, static_cast<std::uint64_t>(i));
                             ComplexMatrix<Scalar> h = sampler.sample(cfg.fading, gen);
                             if (q_root.size() > 0) h = h * q_root;
                             values[i] = stat(h);
                           });
  return reduce_in_index_order(std::move(values), cfg);
}

}  // namespace detail

/// Monte-Carlo estimate of the ergodic sum rate (nats per receive antenna):
/// mean over draws of logdet(I + H Q H^H / sigma2) / N.
template <typename Scalar>
McEstimate<Scalar> ergodic_sum_rate_mc(const ChannelModel<Scalar>& model,
                                       const McConfig<Scalar>& cfg) {
  const int N = model.dims.total_bs();
  const Scalar sigma2 = cfg.point;
  return detail::run_mc(model, cfg, [N, sigma2](const ComplexMatrix<Scalar>& h) {
    const ComplexMatrix<Scalar> a = hermitized<Scalar>(ComplexMatrix<Scalar>(
        ComplexMatrix<Scalar>::Identity(N, N) + (h * h.adjoint()) / sigma2));
    return logdet_hermitian_pd(a, "I + B/sigma2") / Scalar(N);
  });
}

/// Monte-Carlo estimate of the expected resolvent trace
/// tr((B + omega I)^-1) / N with B = H Q H^H.
template <typename Scalar>
McEstimate<Scalar> empirical_stieltjes_mc(const ChannelModel<Scalar>& model,
                                          const McConfig<Scalar>& cfg) {
  const int N = model.dims.total_bs();
  const Scalar omega = cfg.point;
  return detail::run_mc(model, cfg, [N, omega](const ComplexMatrix<Scalar>& h) {
    const ComplexMatrix<Scalar> b = hermitized<Scalar>(ComplexMatrix<Scalar>(h * h.adjoint()));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Scalar>> es(b, Eigen::EigenvaluesOnly);
    return (es.eigenvalues().array().max(Scalar(0)) + omega).inverse().sum() / Scalar(N);
  });
}

/// Side-by-side rate estimates across fading kinds on a common model and
/// seed, with each kind's gap to a reference deterministic value. The
/// pooled standard error combines the two kinds attaining the extreme
/// means, which is the right scale for judging the max-min spread.
template <typename Scalar>
struct FadingInvarianceReport {
  struct Row {
    FadingKind kind;
    McEstimate<Scalar> estimate;
    Scalar gap_to_reference;
  };
  std::vector<Row> rows;
  Scalar reference = 0;          // deterministic rate used for the gaps
  Scalar spread = 0;             // max - min of the MC means
  Scalar pooled_std_error = 0;   // sqrt(se_max^2 + se_min^2)
};

template <typename Scalar>
FadingInvarianceReport<Scalar> fading_invariance_report(const ChannelModel<Scalar>& model,
                                                        Scalar sigma2,
                                                        const std::vector<FadingKind>& kinds,
                                                        std::int64_t samples, std::uint64_t seed,
                                                        Scalar reference_rate, int threads = 0) {
  if (kinds.size() < 2)
    throw ConfigError("fading_invariance_report: need at least two fading kinds");
  FadingInvarianceReport<Scalar> report;
  report.reference = reference_rate;
  for (const FadingKind& kind : kinds) {
    McConfig<Scalar> cfg;
    cfg.samples = samples;
    cfg.seed = seed;
    cfg.fading = kind;
    cfg.point = sigma2;
    cfg.threads = threads;
    typename FadingInvarianceReport<Scalar>::Row row{kind, ergodic_sum_rate_mc(model, cfg),
                                                     Scalar(0)};
    row.gap_to_reference = std::abs(row.estimate.mean - reference_rate);
    report.rows.push_back(std::move(row));
  }
  const auto [lo, hi] =
      std::minmax_element(report.rows.begin(), report.rows.end(),
                          [](const auto& a, const auto& b) { return a.estimate.mean < b.estimate.mean; });
  report.spread = hi->estimate.mean - lo->estimate.mean;
  report.pooled_std_error = std::sqrt(hi->estimate.std_error * hi->estimate.std_error +
                                      lo->estimate.std_error * lo->estimate.std_error);
  return report;
}

}  // namespace deteq
