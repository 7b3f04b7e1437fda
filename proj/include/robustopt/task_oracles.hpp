#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

#include "robustopt/objectives.hpp"
#include "robustopt/oracle.hpp"
#include "robustopt/streams.hpp"

namespace robustopt {

//! Stochastic gradients of 0.5 * |theta - X|^2 over a mean-estimation stream.
class MeanEstimationOracle : public GradientOracle {
 public:
  explicit MeanEstimationOracle(std::shared_ptr<const MeanStream> stream)
      : stream_(std::move(stream)) {
    if (!stream_) throw std::invalid_argument("null stream");
  }

  std::size_t dimension() const override { return stream_->spec().dimension; }

  GradientSample draw(const Vec& theta, Rng& rng) const override {
    MeanSample s = stream_->draw(rng);
    return {mean_estimation_gradient(theta, s.x), s.corrupt};
  }

  std::optional<Vec> optimum() const override { return stream_->mean(); }

  std::optional<Vec> objective_gradient(const Vec& theta) const override {
    return sub(theta, stream_->mean());
  }

  const MeanStream& stream() const { return *stream_; }

 private:
  std::shared_ptr<const MeanStream> stream_;
};

enum class RegressionLoss { squared, huber, logistic, modified_huber };

//! Stochastic gradients of a pointwise regression loss over a regression stream.
class RegressionOracle : public GradientOracle {
 public:
  RegressionOracle(std::shared_ptr<const RegressionStream> stream, RegressionLoss loss,
                   double delta = 1.0)
      : stream_(std::move(stream)), loss_(loss), delta_(delta) {
    if (!stream_) throw std::invalid_argument("null stream");
    if (!(delta_ > 0.0)) throw std::invalid_argument("loss scale must be positive");
    const Task task = stream_->spec().task;
    const bool classification = loss_ == RegressionLoss::logistic || loss_ == RegressionLoss::modified_huber;
    if (classification != (task == Task::logreg)) {
      throw std::invalid_argument("loss does not match the stream's response type");
    }
  }

  std::size_t dimension() const override { return stream_->spec().dimension; }

  GradientSample draw(const Vec& theta, Rng& rng) const override {
    RegressionSample s = stream_->draw(rng);
    return {gradient(theta, s.x, s.y), s.corrupt};
  }

  std::optional<Vec> optimum() const override { return stream_->true_parameter(); }

  const RegressionStream& stream() const { return *stream_; }

 private:
  Vec gradient(const Vec& theta, const Vec& x, double y) const {
    switch (loss_) {
      case RegressionLoss::squared: return linreg_gradient(theta, x, y);
      case RegressionLoss::huber: return huber_linreg_gradient(theta, x, y, delta_);
      case RegressionLoss::logistic: return logreg_gradient(theta, x, y);
      case RegressionLoss::modified_huber: return modified_huber_gradient(theta, x, y, delta_);
    }
    throw std::logic_error("unknown loss");
  }

  std::shared_ptr<const RegressionStream> stream_;
  RegressionLoss loss_;
  double delta_;
};

//! Oracle for a task's canonical loss: squared error or logistic.
inline std::shared_ptr<const GradientOracle> make_task_oracle(const StreamSpec& spec) {
  if (spec.task == Task::mean) {
    return std::make_shared<MeanEstimationOracle>(std::make_shared<MeanStream>(spec));
  }
  const auto loss = spec.task == Task::linreg ? RegressionLoss::squared : RegressionLoss::logistic;
  return std::make_shared<RegressionOracle>(std::make_shared<RegressionStream>(spec), loss);
}

}  // namespace robustopt
