#pragma once

#include <cmath>
#include <stdexcept>

#include "robustopt/vec.hpp"

namespace robustopt {

//! Logistic function, branch on sign so neither tail overflows.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

//! Gradient of 0.5 * |theta - x|^2.
inline Vec mean_estimation_gradient(const Vec& theta, const Vec& x) {
  return sub(theta, x);
}

//! Gradient of 0.5 * (x' theta - y)^2.
inline Vec linreg_gradient(const Vec& theta, const Vec& x, double y) {
  return scaled(x, dot(x, theta) - y);
}

//! Gradient of log(1 + exp(-y x' theta)) for labels y in {-1, +1}.
inline Vec logreg_gradient(const Vec& theta, const Vec& x, double y) {
  if (y != 1.0 && y != -1.0) throw std::invalid_argument("logistic labels must be -1 or +1");
  const double margin = y * dot(x, theta);
  return scaled(x, -y * sigmoid(-margin));
}

//! Huber score: the residual clamped to [-delta, delta].
inline double huber_score(double residual, double delta) {
  if (residual > delta) return delta;
  if (residual < -delta) return -delta;
  return residual;
}

//! Gradient of the Huber loss of the residual x' theta - y.
inline Vec huber_linreg_gradient(const Vec& theta, const Vec& x, double y, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber delta must be positive");
  return scaled(x, huber_score(dot(x, theta) - y, delta));
}

/*!
 * Gradient of the smooth hinge with margin scale delta, in terms of
 * z = y x' theta: zero for z >= delta, quadratic branch -2(delta - z) y x on
 * [-delta, delta), linear branch -4 delta y x below. delta = 1 is the
 * classical parameter-free form.
 */
inline Vec modified_huber_gradient(const Vec& theta, const Vec& x, double y, double delta) {
  if (y != 1.0 && y != -1.0) throw std::invalid_argument("classification labels must be -1 or +1");
  if (!(delta > 0.0)) throw std::invalid_argument("margin scale must be positive");
  const double z = y * dot(x, theta);
  if (z >= delta) return zeros(x.size());
  if (z >= -delta) return scaled(x, -2.0 * (delta - z) * y);
  return scaled(x, -4.0 * delta * y);
}

inline Vec modified_huber_gradient(const Vec& theta, const Vec& x, double y) {
  return modified_huber_gradient(theta, x, y, 1.0);
}

}  // namespace robustopt
