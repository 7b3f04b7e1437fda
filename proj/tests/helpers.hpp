#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustopt/vec.hpp"

namespace testutil {

//! Fresh directory under the system temp root, unique per call.
inline std::filesystem::path temp_dir(const std::string& stem) {
  static std::atomic<unsigned> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    (stem + "_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path);
  return path;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

//! Central difference approximation of the gradient of `f` at `theta`.
inline robustopt::Vec central_difference(const std::function<double(const robustopt::Vec&)>& f,
                                         const robustopt::Vec& theta, double h) {
  robustopt::Vec g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    robustopt::Vec lo = theta, hi = theta;
    lo[i] -= h;
    hi[i] += h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(const robustopt::Vec& got, const robustopt::Vec& want) {
  if (got.size() != want.size()) throw std::invalid_argument("dimension mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(1.0, std::abs(want[i]));
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

/*!
 * Solve the normal equations (X'X) beta = X'y by Gaussian elimination with
 * partial pivoting. Small and dense; test-sized problems only.
 */
inline robustopt::Vec least_squares(const std::vector<robustopt::Vec>& xs,
                                    const std::vector<double>& ys) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("bad design");
  const std::size_t d = xs[0].size();
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t n = 0; n < xs.size(); ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += xs[n][i] * xs[n][j];
      a[i][d] += xs[n][i] * ys[n];
    }
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    if (a[col][col] == 0.0) throw std::runtime_error("singular design");
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= d; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  robustopt::Vec beta(d);
  for (std::size_t i = 0; i < d; ++i) beta[i] = a[i][d] / a[i][i];
  return beta;
}

}  // namespace testutil
