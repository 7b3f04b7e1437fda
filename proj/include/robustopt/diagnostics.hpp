#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robustopt/clipping.hpp"
#include "robustopt/record.hpp"
#include "robustopt/rng.hpp"
#include "robustopt/runner.hpp"
#include "robustopt/task_oracles.hpp"

namespace robustopt {

//! Moments and quantiles of the post-burn-in section of an error trajectory.
struct StationaryStats {
  std::size_t burn_in = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  std::vector<double> samples;
};

namespace detail {

inline double order_statistic(std::vector<double> sorted, double q) {
  auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size())));
  if (idx >= sorted.size()) idx = sorted.size() - 1;
  return sorted[idx];
}

}  // namespace detail

inline StationaryStats collect_stationary_stats(const RunRecord& record, std::size_t burn_in) {
  StationaryStats stats;
  stats.burn_in = burn_in;
  for (const RecordedPoint& p : record.points) {
    if (p.t >= burn_in) stats.samples.push_back(p.error);
  }
  if (stats.samples.empty()) {
    throw std::invalid_argument("burn-in leaves no recorded samples");
  }
  stats.count = stats.samples.size();
  double sum = 0.0, sum2 = 0.0;
  for (double v : stats.samples) {
    sum += v;
    sum2 += v * v;
  }
  const auto n = static_cast<double>(stats.count);
  stats.mean = sum / n;
  stats.second_moment = sum2 / n;
  stats.variance = std::max(0.0, stats.second_moment - stats.mean * stats.mean);
  std::vector<double> sorted = stats.samples;
  std::sort(sorted.begin(), sorted.end());
  stats.q50 = detail::order_statistic(sorted, 0.5);
  stats.q90 = detail::order_statistic(sorted, 0.9);
  stats.q99 = detail::order_statistic(sorted, 0.99);
  return stats;
}

//! Relative gap between first-half and second-half means of a value series.
inline double split_half_relative_diff(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("need at least two values");
  const std::size_t half = values.size() / 2;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < half; ++i) a += values[i];
  for (std::size_t i = half; i < values.size(); ++i) b += values[i];
  a /= static_cast<double>(half);
  b /= static_cast<double>(values.size() - half);
  const double scale = 0.5 * (std::abs(a) + std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

struct EtaScalingRow {
  double eta = 0.0;
  double rmse = 0.0;
};

struct EtaScalingResult {
  std::vector<EtaScalingRow> rows;
  std::optional<double> loglog_slope;
};

/*!
 * Stationary error of rolling-quantile clipping as a function of the
 * corruption rate, with the clip quantile tied to it as p = 1 - eta. Each
 * eta is averaged over `num_seeds` independent runs; the RMSE pools the
 * squared post-burn-in errors. When at least two positive-eta rows exist,
 * the log-log slope of RMSE against eta is fit by least squares.
 */
inline EtaScalingResult eta_scaling_probe(const std::vector<double>& etas, StreamSpec base,
                                          ClipConfig clip, std::size_t horizon,
                                          std::size_t num_seeds, std::uint64_t master_seed) {
  if (etas.empty()) throw std::invalid_argument("need at least one eta");
  if (num_seeds == 0) throw std::invalid_argument("need at least one seed");
  if (horizon < 5) throw std::invalid_argument("horizon too short for a stationary section");

  EtaScalingResult result;
  const auto burn_in = static_cast<std::size_t>(0.2 * static_cast<double>(horizon));
  for (std::size_t k = 0; k < etas.size(); ++k) {
    const double eta = etas[k];
    base.eta = eta;
    clip.quantile_index = 1.0 - eta;
    clip.validate();
    auto oracle = make_task_oracle(base);
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      Rng rng(Rng::split(master_seed, k * num_seeds + s));
      RunRecord rec = run_rqc_sgd(*oracle, clip, ProjectionDomain::unbounded(),
                                  zeros(base.dimension), horizon, rng);
      for (const RecordedPoint& p : rec.points) {
        if (p.t >= burn_in) {
          sum_sq += p.error * p.error;
          ++count;
        }
      }
    }
    result.rows.push_back({eta, std::sqrt(sum_sq / static_cast<double>(count))});
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const EtaScalingRow& row : result.rows) {
    if (row.eta > 0.0 && row.rmse > 0.0) {
      const double x = std::log(row.eta), y = std::log(row.rmse);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  if (n >= 2) {
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (denom > 0.0) result.loglog_slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  }
  return result;
}

enum class ToyNoise { zero, uniform01 };

/*!
 * Scalar contamination chain: with probability 1 - eta the state contracts,
 * X <- alpha X + noise; with probability eta it jumps, X <- X + tau.
 */
struct ToyChainConfig {
  double alpha = 0.5;
  double tau = 1.0;
  double eta = 0.1;
  ToyNoise noise = ToyNoise::uniform01;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(eta >= 0.0 && eta < 0.5)) throw std::invalid_argument("eta must lie in [0, 1/2)");
  }
};

struct ToyChainMoments {
  std::vector<int> orders;          // k
  std::vector<double> m;            // M_k = (E|X|^k)^(1/k)
  std::vector<double> ratio_to_k;   // M_k / k, for growth-rate inspection
  double stationary_mean = 0.0;
};

/*!
 * Simulate the chain from zero and estimate absolute-moment roots M_k for
 * k = 1..max_k from the states past a burn-in fraction of the horizon.
 */
inline ToyChainMoments toy_chain_moments(const ToyChainConfig& config, std::size_t horizon,
                                         int max_k, std::uint64_t seed,
                                         double burn_in_fraction = 0.2) {
  config.validate();
  if (max_k < 1 || max_k > 10) throw std::invalid_argument("moment order must lie in 1..10");
  if (horizon < 10) throw std::invalid_argument("horizon too short");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw std::invalid_argument("burn-in fraction must lie in [0, 1)");
  }

  Rng rng(seed);
  const auto burn_in = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(horizon));
  std::vector<double> power_sums(static_cast<std::size_t>(max_k), 0.0);
  double mean_sum = 0.0;
  std::size_t count = 0;
  double x = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (rng.bernoulli(config.eta)) {
      x += config.tau;
    } else {
      const double noise = config.noise == ToyNoise::uniform01 ? rng.uniform01() : 0.0;
      x = config.alpha * x + noise;
    }
    if (t >= burn_in) {
      const double a = std::abs(x);
      double p = 1.0;
      for (int k = 0; k < max_k; ++k) {
        p *= a;
        power_sums[static_cast<std::size_t>(k)] += p;
      }
      mean_sum += x;
      ++count;
    }
  }

  ToyChainMoments out;
  const auto n = static_cast<double>(count);
  for (int k = 1; k <= max_k; ++k) {
    const double mk = std::pow(power_sums[static_cast<std::size_t>(k - 1)] / n, 1.0 / k);
    out.orders.push_back(k);
    out.m.push_back(mk);
    out.ratio_to_k.push_back(mk / k);
  }
  out.stationary_mean = mean_sum / n;
  return out;
}

}  // namespace robustopt
