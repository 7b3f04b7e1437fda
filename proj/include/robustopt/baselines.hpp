#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robustopt/objectives.hpp"
#include "robustopt/record.hpp"
#include "robustopt/rng.hpp"
#include "robustopt/runner.hpp"
#include "robustopt/streams.hpp"
#include "robustopt/vec.hpp"

namespace robustopt {

//! Accumulates samples and emits their mean once per full block.
class BlockBuffer {
 public:
  explicit BlockBuffer(std::size_t block_size) : block_size_(block_size) {
    if (block_size_ == 0) throw std::invalid_argument("block size must be positive");
  }

  std::optional<Vec> feed(const Vec& sample) {
    if (sum_.empty()) {
      sum_ = zeros(sample.size());
    }
    check_same_dim(sum_, sample);
    axpy(sum_, 1.0, sample);
    if (++count_ < block_size_) return std::nullopt;
    Vec mean = scaled(std::move(sum_), 1.0 / static_cast<double>(block_size_));
    sum_.clear();
    count_ = 0;
    return mean;
  }

  std::size_t block_size() const { return block_size_; }
  std::size_t pending() const { return count_; }

 private:
  std::size_t block_size_;
  Vec sum_;
  std::size_t count_ = 0;
};

/*!
 * Geometric median-of-means step: descend the objective E|theta - M|_2 along
 * the unit direction toward the block mean M. The step length absorbs a
 * factor block_size (one update per block) and sqrt(d). A block mean equal to
 * theta yields a zero step.
 */
inline Vec gmom_step(const Vec& theta, const Vec& block_mean, double beta,
                     std::size_t block_size) {
  check_same_dim(theta, block_mean);
  if (!(beta > 0.0)) throw std::invalid_argument("step size must be positive");
  Vec dir = sub(theta, block_mean);
  const double n = norm2(dir);
  if (n == 0.0) return theta;
  const double scale =
      beta * static_cast<double>(block_size) * std::sqrt(static_cast<double>(theta.size())) / n;
  Vec next = theta;
  axpy(next, -scale, dir);
  return next;
}

/*!
 * Coordinatewise median-of-means step: descend E|theta - M|_1, i.e. move each
 * coordinate by -beta * block_size * sign(theta_i - M_i), with sign(0) = 0.
 */
inline Vec cmom_step(const Vec& theta, const Vec& block_mean, double beta,
                     std::size_t block_size) {
  check_same_dim(theta, block_mean);
  if (!(beta > 0.0)) throw std::invalid_argument("step size must be positive");
  const double step = beta * static_cast<double>(block_size);
  Vec next = theta;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double d = theta[i] - block_mean[i];
    if (d > 0.0) next[i] -= step;
    else if (d < 0.0) next[i] += step;
  }
  return next;
}

enum class MomVariant { geometric, coordinatewise };

/*!
 * Median-of-means descent over a mean-estimation stream: consume
 * `horizon` raw samples, update once per full block. Recorded time indices
 * count samples, so floor(horizon / block_size) updates happen in total.
 */
inline RunRecord run_mom(const MeanStream& stream, MomVariant variant, double beta,
                         std::size_t block_size, const Vec& theta0, std::size_t horizon, Rng& rng,
                         const RunOptions& opts = {}) {
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (opts.record_stride == 0) throw std::invalid_argument("record stride must be positive");
  if (theta0.size() != stream.spec().dimension) {
    throw std::invalid_argument("initial point dimension does not match the stream");
  }
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config_summary = opts.config_summary;
  BlockBuffer buffer(block_size);
  Vec theta = theta0;
  const Vec& target = stream.mean();
  for (std::size_t t = 0; t < horizon; ++t) {
    MeanSample s;
    try {
      s = stream.draw(rng);
    } catch (const std::exception& e) {
      throw RunAbort(t, e.what());
    }
    ++rec.steps;
    if (s.corrupt) ++rec.corrupt_samples;
    if (!all_finite(s.x)) {
      ++rec.rejected_samples;
    } else if (auto mean = buffer.feed(s.x)) {
      theta = variant == MomVariant::geometric ? gmom_step(theta, *mean, beta, block_size)
                                               : cmom_step(theta, *mean, beta, block_size);
      ++rec.updates;
    }
    if (t % opts.record_stride == 0 || t + 1 == horizon) {
      rec.points.push_back({t, distance(theta, target), 0.0, false});
    }
  }
  rec.final_theta = std::move(theta);
  rec.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

//! Constant clip threshold lambda * sigma_max * sqrt(d).
struct ConstantClipConfig {
  double lambda = 1.0;

  double threshold(double sigma_max, std::size_t dimension) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(sigma_max > 0.0)) throw std::invalid_argument("sigma_max must be positive");
    return lambda * sigma_max * std::sqrt(static_cast<double>(dimension));
  }
};

//! Grid search configuration for the robust-loss scale parameter.
struct HuberTuneConfig {
  std::vector<double> candidates = default_candidates();
  std::size_t estimators_per_candidate = 250;
  std::size_t samples_per_estimator = 1000;

  //! The canonical grid 10^(j/2 - 5), j = 0..9.
  static std::vector<double> default_candidates() {
    std::vector<double> c;
    c.reserve(10);
    for (int j = 0; j < 10; ++j) c.push_back(std::pow(10.0, 0.5 * j - 5.0));
    return c;
  }

  void validate() const {
    if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
    for (double d : candidates) {
      if (!(d > 0.0)) throw std::invalid_argument("candidates must be positive");
    }
    if (estimators_per_candidate == 0 || samples_per_estimator == 0) {
      throw std::invalid_argument("tuning sample counts must be positive");
    }
  }
};

struct HuberTuneResult {
  double selected_delta = 0.0;
  std::size_t selected_index = 0;
  std::vector<double> average_errors;
};

/*!
 * Pick the loss scale with the smallest average final distance to the true
 * parameter: for every candidate delta, train `estimators_per_candidate`
 * plain-SGD estimators of `samples_per_estimator` samples each on the task's
 * robust loss (Huber for linear regression, scaled smooth hinge for logistic)
 * over the corrupted stream, from zero, at step size beta. The same per-
 * estimator sample seeds are reused across candidates, so the comparison is
 * paired; ties resolve to the smallest candidate. Deterministic in `seed`.
 */
inline HuberTuneResult tune_huber_delta_detailed(const StreamSpec& spec,
                                                 const HuberTuneConfig& tune, double beta,
                                                 std::uint64_t seed) {
  tune.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (spec.task != Task::linreg && spec.task != Task::logreg) {
    throw std::invalid_argument("tuning requires a regression task");
  }
  const RegressionStream stream(spec);
  const Vec& target = stream.true_parameter();
  const std::size_t d = spec.dimension;

  HuberTuneResult result;
  result.average_errors.reserve(tune.candidates.size());
  for (std::size_t j = 0; j < tune.candidates.size(); ++j) {
    const double delta = tune.candidates[j];
    double total = 0.0;
    for (std::size_t i = 0; i < tune.estimators_per_candidate; ++i) {
      Rng rng(Rng::split(seed, i));
      Vec theta = zeros(d);
      for (std::size_t s = 0; s < tune.samples_per_estimator; ++s) {
        const RegressionSample sample = stream.draw(rng);
        const Vec grad = spec.task == Task::linreg
                             ? huber_linreg_gradient(theta, sample.x, sample.y, delta)
                             : modified_huber_gradient(theta, sample.x, sample.y, delta);
        if (!all_finite(grad)) continue;
        axpy(theta, -beta, grad);
      }
      total += distance(theta, target);
    }
    result.average_errors.push_back(total / static_cast<double>(tune.estimators_per_candidate));
  }

  result.selected_index = 0;
  for (std::size_t j = 1; j < tune.candidates.size(); ++j) {
    if (result.average_errors[j] < result.average_errors[result.selected_index]) {
      result.selected_index = j;
    }
  }
  result.selected_delta = tune.candidates[result.selected_index];
  return result;
}

inline double tune_huber_delta(const StreamSpec& spec, const HuberTuneConfig& tune, double beta,
                               std::uint64_t seed) {
  return tune_huber_delta_detailed(spec, tune, beta, seed).selected_delta;
}

}  // namespace robustopt
