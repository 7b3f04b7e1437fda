#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "robustopt/vec.hpp"

namespace robustopt {

/*!
 * Norm-clipping factor min(1, threshold / gradient_norm). A zero gradient is
 * left untouched (factor 1). The scaled gradient always has norm at most
 * `threshold`.
 */
inline double clip_factor(double gradient_norm, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
  if (!(gradient_norm >= 0.0)) throw std::invalid_argument("gradient norm must be nonnegative");
  if (gradient_norm <= threshold) return 1.0;
  return threshold / gradient_norm;
}

//! Feasible region of the iterates: the whole space or a closed Euclidean ball.
class ProjectionDomain {
 public:
  static ProjectionDomain unbounded() { return ProjectionDomain(); }

  static ProjectionDomain euclidean_ball(Vec center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    ProjectionDomain d;
    d.bounded_ = true;
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
  }

  bool bounded() const { return bounded_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

  Vec project(Vec x) const {
    if (!bounded_) return x;
    check_same_dim(x, center_);
    double dist2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - center_[i];
      dist2 += d * d;
    }
    const double dist = std::sqrt(dist2);
    if (dist <= radius_) return x;
    const double f = radius_ / dist;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = center_[i] + (x[i] - center_[i]) * f;
    return x;
  }

 private:
  bool bounded_ = false;
  Vec center_;
  double radius_ = 0.0;
};

//! One clipped gradient step: project(theta - beta * clip_factor * gradient).
inline Vec qc_sgd_step(const Vec& theta, const Vec& gradient, double threshold, double beta,
                       const ProjectionDomain& domain) {
  check_same_dim(theta, gradient);
  if (!(beta > 0.0)) throw std::invalid_argument("step size must be positive");
  const double alpha = clip_factor(norm2(gradient), threshold);
  Vec next = theta;
  axpy(next, -beta * alpha, gradient);
  return domain.project(std::move(next));
}

}  // namespace robustopt
