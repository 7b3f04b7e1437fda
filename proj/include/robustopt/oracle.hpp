#pragma once

#include <optional>
#include <stdexcept>

#include "robustopt/rng.hpp"
#include "robustopt/vec.hpp"

namespace robustopt {

/*!
 * One stochastic gradient draw. The provenance flag says whether the sample
 * came from the corrupt branch of the stream; it exists for instrumentation
 * and diagnostics only. Optimizer update rules take the bare vector, so they
 * cannot act on it.
 */
struct GradientSample {
  Vec vector;
  bool corrupt = false;
};

/*!
 * Source of stochastic gradients for a fixed objective. Oracles are immutable
 * after construction; all per-draw randomness flows through the caller's Rng,
 * so concurrent runs may share one oracle, each with its own generator.
 *
 * `optimum` and `objective_gradient` form the metrics channel: they are only
 * ever used to evaluate progress, never by the optimizers themselves.
 */
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual GradientSample draw(const Vec& theta, Rng& rng) const = 0;

  virtual std::optional<Vec> optimum() const { return std::nullopt; }
  virtual std::optional<Vec> objective_gradient(const Vec& /*theta*/) const { return std::nullopt; }
};

/*!
 * Progress measure of an iterate: distance to the optimum when the oracle
 * knows it, otherwise the exact objective gradient norm.
 */
inline double error_metric(const GradientOracle& oracle, const Vec& theta) {
  if (auto opt = oracle.optimum()) return distance(theta, *opt);
  if (auto grad = oracle.objective_gradient(theta)) return norm2(*grad);
  throw std::logic_error("oracle exposes neither an optimum nor an objective gradient");
}

}  // namespace robustopt
