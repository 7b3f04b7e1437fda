#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "robustopt/objectives.hpp"
#include "robustopt/rng.hpp"
#include "robustopt/vec.hpp"

namespace robustopt {

enum class Task { mean, linreg, logreg };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::mean: return "mean";
    case Task::linreg: return "linreg";
    case Task::logreg: return "logreg";
  }
  throw std::invalid_argument("unknown task");
}

inline Task task_from_name(const std::string& name) {
  if (name == "mean") return Task::mean;
  if (name == "linreg") return Task::linreg;
  if (name == "logreg") return Task::logreg;
  throw std::invalid_argument("unknown task: " + name);
}

/*!
 * Description of a synthetic data stream. `seed` freezes the stream's
 * structural parameters (scaling matrix, true and decoy regression vectors);
 * per-draw randomness comes from the generator passed to each draw call.
 */
struct StreamSpec {
  Task task = Task::mean;
  std::size_t dimension = 0;
  double eta = 0.0;  // corruption probability
  double sigma_min = 1.0;
  double sigma_max = 5.0;
  std::uint64_t seed = 0;

  // Test hooks.
  bool disable_noise = false;        // samples carry no observation noise
  bool allow_degenerate_eta = false; // permit eta up to 1 (corrupt-only streams)

  void validate() const {
    if (dimension == 0) throw std::invalid_argument("stream dimension must be positive");
    const double eta_cap = allow_degenerate_eta ? 1.0 : 0.5;
    if (!(eta >= 0.0) || eta > eta_cap || (!allow_degenerate_eta && eta >= eta_cap)) {
      throw std::invalid_argument("eta must lie in [0, 1/2)");
    }
    if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) {
      throw std::invalid_argument("need 0 < sigma_min <= sigma_max");
    }
  }
};

//! Pareto variate with unit minimum and unit scale: u^(-1/shape), u uniform on (0, 1].
inline double sample_pareto(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("pareto shape must be positive");
  return std::pow(rng.uniform01_open_left(), -1.0 / shape);
}

//! Random sign times a unit-minimum Pareto variate; |value| >= 1 always.
inline double sample_symmetrized_pareto(double shape, Rng& rng) {
  return rng.rademacher() * sample_pareto(shape, rng);
}

//! Random sign times exp(N(mu, sigma^2)).
inline double sample_symmetrized_lognormal(Rng& rng, double mu = 0.0, double sigma = 1.0) {
  return rng.rademacher() * std::exp(mu + sigma * rng.normal());
}

inline Vec sample_unit_sphere(std::size_t d, Rng& rng) {
  Vec v(d);
  for (double& c : v) c = rng.normal();
  const double n = norm2(v);
  if (n == 0.0) return basis_vector(d, 0);
  for (double& c : v) c /= n;
  return v;
}

/*!
 * Covariance-like scaling applied to raw noise vectors. Either a full
 * symmetric matrix (A A' + A' A) / 2 with A i.i.d. N(0, 1/d), or a diagonal
 * with entries uniform on [lo, hi]. Frozen once per stream.
 */
class ScalingMatrix {
 public:
  static ScalingMatrix symmetrized_gaussian(std::size_t d, Rng& rng) {
    std::vector<double> a(d * d);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : a) v = sd * rng.normal();
    ScalingMatrix m;
    m.dim_ = d;
    m.diagonal_ = false;
    m.data_.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          s += a[i * d + k] * a[j * d + k] + a[k * d + i] * a[k * d + j];
        }
        m.data_[i * d + j] = 0.5 * s;
      }
    }
    return m;
  }

  static ScalingMatrix diagonal_uniform(std::size_t d, double lo, double hi, Rng& rng) {
    ScalingMatrix m;
    m.dim_ = d;
    m.diagonal_ = true;
    m.data_.resize(d);
    for (double& v : m.data_) v = rng.uniform(lo, hi);
    return m;
  }

  std::size_t dimension() const { return dim_; }
  bool diagonal() const { return diagonal_; }

  double entry(std::size_t i, std::size_t j) const {
    if (diagonal_) return i == j ? data_[i] : 0.0;
    return data_[i * dim_ + j];
  }

  double max_diagonal() const {
    double m = entry(0, 0);
    for (std::size_t i = 1; i < dim_; ++i) m = std::max(m, entry(i, i));
    return m;
  }

  Vec apply(const Vec& v) const {
    if (v.size() != dim_) throw std::invalid_argument("scaling dimension mismatch");
    Vec out(dim_);
    if (diagonal_) {
      for (std::size_t i = 0; i < dim_; ++i) out[i] = data_[i] * v[i];
      return out;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) s += data_[i * dim_ + j] * v[j];
      out[i] = s;
    }
    return out;
  }

 private:
  std::size_t dim_ = 0;
  bool diagonal_ = true;
  std::vector<double> data_;
};

/*!
 * Mix a clean and a corrupt source: with probability eta the sample comes
 * from the corrupt one, and the returned flag records which branch was taken.
 * eta = 0 draws nothing extra from the generator, so the mixed stream is
 * sample-for-sample identical to the clean source under a shared seed; the
 * degenerate eta = 1 (corrupt-only) is symmetric and gated behind
 * `allow_degenerate`.
 */
template <class CleanFn, class CorruptFn>
auto corrupt_mix(CleanFn&& clean, CorruptFn&& corrupt, double eta, Rng& rng,
                 bool allow_degenerate = false) -> std::pair<decltype(clean(rng)), bool> {
  if (!(eta >= 0.0) || eta > 1.0 || (!allow_degenerate && eta >= 0.5)) {
    throw std::invalid_argument("mixing rate must lie in [0, 1/2)");
  }
  if (eta == 0.0) return {clean(rng), false};
  if (eta == 1.0) return {corrupt(rng), true};
  if (rng.bernoulli(eta)) return {corrupt(rng), true};
  return {clean(rng), false};
}

struct MeanSample {
  Vec x;
  bool corrupt = false;
};

/*!
 * Heavy-tailed mean-estimation stream. Clean samples are 1 + S v with v
 * i.i.d. symmetrized Pareto(2) and S a frozen symmetrized Gaussian matrix;
 * corrupt samples are 10 w - 100 * 1 with w i.i.d. symmetrized Pareto(1.5).
 */
class MeanStream {
 public:
  explicit MeanStream(const StreamSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.task != Task::mean) throw std::invalid_argument("spec task must be mean");
    Rng frozen(Rng::split(spec_.seed, kFrozenTag));
    scaling_ = ScalingMatrix::symmetrized_gaussian(spec_.dimension, frozen);
    mean_ = ones(spec_.dimension);
  }

  Vec draw_clean(Rng& rng) const {
    if (spec_.disable_noise) return mean_;
    Vec v(spec_.dimension);
    for (double& c : v) c = sample_symmetrized_pareto(2.0, rng);
    return add(scaling_.apply(v), mean_);
  }

  Vec draw_corrupt(Rng& rng) const {
    Vec x(spec_.dimension);
    for (double& c : x) c = 10.0 * sample_symmetrized_pareto(1.5, rng) - 100.0;
    return x;
  }

  MeanSample draw(Rng& rng) const {
    auto [x, corrupt] = corrupt_mix([this](Rng& r) { return draw_clean(r); },
                                    [this](Rng& r) { return draw_corrupt(r); }, spec_.eta, rng,
                                    spec_.allow_degenerate_eta);
    return {std::move(x), corrupt};
  }

  const Vec& mean() const { return mean_; }
  const ScalingMatrix& scaling() const { return scaling_; }
  const StreamSpec& spec() const { return spec_; }

 private:
  static constexpr std::uint64_t kFrozenTag = 0x5354524d;  // frozen-parameter stream tag

  StreamSpec spec_;
  ScalingMatrix scaling_;
  Vec mean_;
};

struct RegressionSample {
  Vec x;
  double y = 0.0;
  bool corrupt = false;
};

//! Frozen structural parameters of a regression stream, injectable in tests.
struct RegressionFrozen {
  ScalingMatrix scaling;
  Vec true_parameter;
  Vec fake_parameter;
  Vec corrupt_direction;
};

/*!
 * Regression stream shared by the linear and logistic tasks. Clean
 * covariates are S v with S a frozen diagonal (entries uniform on
 * [sigma_min, sigma_max]) and v i.i.d. symmetrized Pareto(2). Clean linear
 * responses are x' theta_true + e with e symmetrized Pareto(2); clean
 * logistic labels are +1 with probability sigmoid(x' theta_true).
 *
 * Corrupt draws pick one of three modes uniformly:
 *   0: x = 1000 * max_diag * u + w, u a frozen unit direction, w standard
 *      Gaussian; linear response Bernoulli(1/2) on {0, 1}, logistic label
 *      uniform on {-1, +1}.
 *   1: x = 1000 * max_diag * (uniform unit sphere); linear response
 *      1000 (z + u) with z Rademacher and u uniform on [-1/5, 1/5];
 *      logistic label -sign(x' theta_true).
 *   2: x = 10 * w with w i.i.d. symmetrized LogNormal(0, 1); linear response
 *      x' theta_fake + standard Gaussian; logistic label sign(x' theta_fake).
 */
class RegressionStream {
 public:
  explicit RegressionStream(const StreamSpec& spec)
      : RegressionStream(spec, frozen_from_seed(spec)) {}

  RegressionStream(const StreamSpec& spec, RegressionFrozen frozen)
      : spec_(spec), frozen_(std::move(frozen)) {
    spec_.validate();
    if (spec_.task != Task::linreg && spec_.task != Task::logreg) {
      throw std::invalid_argument("spec task must be linreg or logreg");
    }
    if (frozen_.scaling.dimension() != spec_.dimension ||
        frozen_.true_parameter.size() != spec_.dimension ||
        frozen_.fake_parameter.size() != spec_.dimension ||
        frozen_.corrupt_direction.size() != spec_.dimension) {
      throw std::invalid_argument("frozen parameter dimension mismatch");
    }
  }

  RegressionSample draw_clean(Rng& rng) const {
    Vec v(spec_.dimension);
    for (double& c : v) c = sample_symmetrized_pareto(2.0, rng);
    Vec x = frozen_.scaling.apply(v);
    const double y = draw_clean_label(x, rng);
    return {std::move(x), y, false};
  }

  //! Clean response law for a given covariate vector.
  double draw_clean_label(const Vec& x, Rng& rng) const {
    const double m = dot(x, frozen_.true_parameter);
    if (spec_.task == Task::linreg) {
      if (spec_.disable_noise) return m;
      return m + sample_symmetrized_pareto(2.0, rng);
    }
    if (spec_.disable_noise) return sign(m);
    return rng.bernoulli(sigmoid(m)) ? 1.0 : -1.0;
  }

  RegressionSample draw_corrupt(Rng& rng) const {
    auto mode = static_cast<int>(rng.uniform01() * 3.0);
    if (mode > 2) mode = 2;
    return draw_corrupt_mode(mode, rng);
  }

  RegressionSample draw_corrupt_mode(int mode, Rng& rng) const {
    const std::size_t d = spec_.dimension;
    const double spike = 1000.0 * frozen_.scaling.max_diagonal();
    Vec x;
    double y = 0.0;
    switch (mode) {
      case 0: {
        x = scaled(frozen_.corrupt_direction, spike);
        for (double& c : x) c += rng.normal();
        if (spec_.task == Task::linreg) {
          y = rng.bernoulli(0.5) ? 1.0 : 0.0;  // a literal {0, 1} coin, deliberately mis-scaled
        } else {
          y = rng.rademacher();
        }
        break;
      }
      case 1: {
        x = scaled(sample_unit_sphere(d, rng), spike);
        if (spec_.task == Task::linreg) {
          y = 1000.0 * (rng.rademacher() + rng.uniform(-0.2, 0.2));
        } else {
          y = -sign(dot(x, frozen_.true_parameter));
        }
        break;
      }
      case 2: {
        x.resize(d);
        for (double& c : x) c = 10.0 * sample_symmetrized_lognormal(rng);
        if (spec_.task == Task::linreg) {
          y = dot(x, frozen_.fake_parameter) + rng.normal();
        } else {
          y = sign(dot(x, frozen_.fake_parameter));
        }
        break;
      }
      default: throw std::invalid_argument("corruption mode must be 0, 1 or 2");
    }
    return {std::move(x), y, true};
  }

  RegressionSample draw(Rng& rng) const {
    auto [s, corrupt] = corrupt_mix([this](Rng& r) { return draw_clean(r); },
                                    [this](Rng& r) { return draw_corrupt(r); }, spec_.eta, rng,
                                    spec_.allow_degenerate_eta);
    s.corrupt = corrupt;
    return s;
  }

  const Vec& true_parameter() const { return frozen_.true_parameter; }
  const Vec& fake_parameter() const { return frozen_.fake_parameter; }
  const ScalingMatrix& scaling() const { return frozen_.scaling; }
  const StreamSpec& spec() const { return spec_; }

 private:
  static constexpr std::uint64_t kFrozenTag = 0x5354524d;

  static double sign(double t) { return t >= 0.0 ? 1.0 : -1.0; }

  static RegressionFrozen frozen_from_seed(const StreamSpec& spec) {
    spec.validate();
    Rng frozen(Rng::split(spec.seed, kFrozenTag));
    RegressionFrozen f{
        ScalingMatrix::diagonal_uniform(spec.dimension, spec.sigma_min, spec.sigma_max, frozen),
        Vec(spec.dimension), Vec(spec.dimension), basis_vector(spec.dimension, 0)};
    for (double& c : f.true_parameter) c = frozen.uniform(-5.0, 5.0);
    for (double& c : f.fake_parameter) c = frozen.uniform(-5.0, 5.0);
    return f;
  }

  StreamSpec spec_;
  RegressionFrozen frozen_;
};

}  // namespace robustopt
