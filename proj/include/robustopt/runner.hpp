#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustopt/clipping.hpp"
#include "robustopt/oracle.hpp"
#include "robustopt/quantile_buffer.hpp"
#include "robustopt/record.hpp"
#include "robustopt/rng.hpp"
#include "robustopt/vec.hpp"

namespace robustopt {

struct RunOptions {
  std::size_t record_stride = 1;
  std::string config_summary;
};

namespace detail {

// Relative slack for the norm and displacement checks; covers floating-point
// rounding of an invariant that holds exactly in real arithmetic.
inline constexpr double kClipCheckSlack = 1e-12;

/*!
 * Shared clipped-SGD loop. `next_threshold(norm)` observes the norm of the
 * current gradient and returns the clip threshold for this iteration;
 * `rejected(norm)` tells whether the sample must be skipped without touching
 * the threshold state.
 */
template <class ThresholdFn>
RunRecord run_clipped_loop(const GradientOracle& oracle, double beta,
                           const ProjectionDomain& domain, const Vec& theta0, std::size_t horizon,
                           Rng& rng, const RunOptions& opts, double initial_threshold,
                           ThresholdFn&& next_threshold) {
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (opts.record_stride == 0) throw std::invalid_argument("record stride must be positive");
  if (theta0.size() != oracle.dimension()) {
    throw std::invalid_argument("initial point dimension does not match the oracle");
  }

  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config_summary = opts.config_summary;
  const std::optional<Vec> optimum = oracle.optimum();
  const auto progress = [&](const Vec& theta) {
    return optimum ? distance(theta, *optimum) : error_metric(oracle, theta);
  };

  Vec theta = domain.project(theta0);
  double tau = initial_threshold;
  for (std::size_t t = 0; t < horizon; ++t) {
    GradientSample sample;
    try {
      sample = oracle.draw(theta, rng);
    } catch (const std::exception& e) {
      throw RunAbort(t, e.what());
    }
    ++rec.steps;
    if (sample.corrupt) ++rec.corrupt_samples;

    bool clipped = false;
    const double norm = all_finite(sample.vector) ? norm2(sample.vector)
                                                  : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(norm)) {
      ++rec.rejected_samples;
    } else {
      tau = next_threshold(norm);
      const double alpha = clip_factor(norm, tau);
      clipped = alpha < 1.0;

      Vec scaled_grad = scaled(sample.vector, alpha);
      if (norm2(scaled_grad) > tau * (1.0 + kClipCheckSlack)) ++rec.clip_norm_violations;

      Vec next = theta;
      axpy(next, -beta, scaled_grad);
      next = domain.project(std::move(next));
      if (distance(next, theta) > beta * tau * (1.0 + kClipCheckSlack)) {
        ++rec.displacement_violations;
      }
      theta = std::move(next);
      ++rec.updates;
    }

    if (t % opts.record_stride == 0 || t + 1 == horizon) {
      rec.points.push_back({t, progress(theta), tau, clipped});
    }
  }
  rec.final_theta = std::move(theta);
  rec.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace detail

/*!
 * Stochastic gradient descent with rolling-quantile clipping: each iteration
 * pushes the fresh gradient norm into the window, clips at the window's
 * p-quantile, steps, and drops the oldest stored norm.
 */
inline RunRecord run_rqc_sgd(const GradientOracle& oracle, const ClipConfig& config,
                             const ProjectionDomain& domain, const Vec& theta0,
                             std::size_t horizon, Rng& rng, const RunOptions& opts = {}) {
  config.validate();
  QuantileBuffer buffer(config);
  auto rec = detail::run_clipped_loop(oracle, config.step_size, domain, theta0, horizon, rng,
                                      opts, config.init_threshold, [&](double norm) {
                                        buffer.push(norm);
                                        return buffer.quantile(config.quantile_index);
                                      });
  return rec;
}

/*!
 * Clipped SGD with a constant threshold. A threshold of +infinity makes this
 * plain SGD.
 */
inline RunRecord run_clipped_sgd(const GradientOracle& oracle, double threshold, double beta,
                                 const ProjectionDomain& domain, const Vec& theta0,
                                 std::size_t horizon, Rng& rng, const RunOptions& opts = {}) {
  if (!(threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("step size must be positive");
  return detail::run_clipped_loop(oracle, beta, domain, theta0, horizon, rng, opts, threshold,
                                  [threshold](double) { return threshold; });
}

//! Layout of the cycling-iterates scheme: how many iterates share the horizon.
struct AggregationConfig {
  std::size_t num_iterates = 16;  // N, even
  std::size_t horizon = 0;        // T, multiple of N

  void validate() const {
    if (num_iterates < 2) throw std::invalid_argument("need at least two iterates");
    if (num_iterates % 2 != 0) throw std::invalid_argument("the iterate count must be even");
    if (num_iterates > horizon) {
      throw std::invalid_argument("horizon shorter than the iterate count");
    }
    if (horizon % num_iterates != 0) {
      throw std::invalid_argument("horizon must be a multiple of the iterate count");
    }
  }
};

/*!
 * Pick the most central point: for each candidate, sort its distances to all
 * candidates (self included) and score it by the entry at index N/2; return
 * the index of the smallest score, breaking ties toward the lowest index.
 */
inline std::size_t select_min_median_distance(const std::vector<Vec>& iterates) {
  const std::size_t n = iterates.size();
  if (n == 0) throw std::invalid_argument("no iterates to select from");
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = distance(iterates[i], iterates[j]);
    std::sort(row.begin(), row.end());
    const double score = row[n / 2];
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

struct CyclingResult {
  Vec aggregate;
  std::size_t chosen_index = 0;
  std::vector<Vec> final_iterates;
  RunRecord record;
};

/*!
 * Run N rolling-quantile-clipped iterates from a common start, cycling
 * through them so that iterate i consumes exactly the samples at steps
 * t = i mod N (each with its own norm window), then return the iterate whose
 * sorted distance profile to the others has the smallest middle entry.
 *
 * Recorded errors are the median of the per-iterate errors at that step.
 */
inline CyclingResult cycling_aggregate_detailed(const GradientOracle& oracle,
                                                const ClipConfig& config,
                                                const AggregationConfig& agg, const Vec& theta0,
                                                Rng& rng, const RunOptions& opts = {}) {
  config.validate();
  agg.validate();
  if (opts.record_stride == 0) throw std::invalid_argument("record stride must be positive");
  if (theta0.size() != oracle.dimension()) {
    throw std::invalid_argument("initial point dimension does not match the oracle");
  }

  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = agg.num_iterates;
  const std::optional<Vec> optimum = oracle.optimum();

  CyclingResult result;
  result.record.config_summary = opts.config_summary;
  RunRecord& rec = result.record;

  std::vector<Vec> thetas(n, theta0);
  std::vector<QuantileBuffer> buffers;
  buffers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) buffers.emplace_back(config);

  std::vector<double> errors(n);
  const auto median_error = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      errors[i] = optimum ? distance(thetas[i], *optimum) : error_metric(oracle, thetas[i]);
    }
    std::sort(errors.begin(), errors.end());
    return 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  };

  double tau = config.init_threshold;
  for (std::size_t t = 0; t < agg.horizon; ++t) {
    const std::size_t i = t % n;
    GradientSample sample;
    try {
      sample = oracle.draw(thetas[i], rng);
    } catch (const std::exception& e) {
      throw RunAbort(t, e.what());
    }
    ++rec.steps;
    if (sample.corrupt) ++rec.corrupt_samples;

    bool clipped = false;
    const double norm = all_finite(sample.vector) ? norm2(sample.vector)
                                                  : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(norm)) {
      ++rec.rejected_samples;
    } else {
      buffers[i].push(norm);
      tau = buffers[i].quantile(config.quantile_index);
      const double alpha = clip_factor(norm, tau);
      clipped = alpha < 1.0;
      Vec scaled_grad = scaled(sample.vector, alpha);
      if (norm2(scaled_grad) > tau * (1.0 + detail::kClipCheckSlack)) ++rec.clip_norm_violations;
      axpy(thetas[i], -config.step_size, scaled_grad);
      ++rec.updates;
    }

    if (t % opts.record_stride == 0 || t + 1 == agg.horizon) {
      rec.points.push_back({t, median_error(), tau, clipped});
    }
  }

  result.final_iterates = std::move(thetas);
  result.chosen_index = select_min_median_distance(result.final_iterates);
  result.aggregate = result.final_iterates[result.chosen_index];
  rec.final_theta = result.aggregate;
  rec.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline Vec cycling_aggregate(const GradientOracle& oracle, const ClipConfig& config,
                             const AggregationConfig& agg, const Vec& theta0, Rng& rng) {
  return cycling_aggregate_detailed(oracle, config, agg, theta0, rng).aggregate;
}

}  // namespace robustopt
