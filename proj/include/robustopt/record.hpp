#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustopt/vec.hpp"

namespace robustopt {

//! Snapshot of one recorded iteration of a run.
struct RecordedPoint {
  std::uint64_t t = 0;
  double error = 0.0;      // distance to the optimum, or a gradient-norm proxy
  double threshold = 0.0;  // clip threshold in force at this iteration
  bool clipped = false;    // whether the gradient norm exceeded the threshold
};

//! Full outcome of a single optimization run.
struct RunRecord {
  std::string config_summary;
  std::uint64_t seed = 0;
  std::vector<RecordedPoint> points;
  Vec final_theta;
  double wall_time_seconds = 0.0;  // informational only, never serialized

  // Instrumentation counters.
  std::uint64_t steps = 0;    // samples consumed
  std::uint64_t updates = 0;  // parameter updates performed
  std::uint64_t rejected_samples = 0;
  std::uint64_t corrupt_samples = 0;  // provenance tally; metrics only
  std::uint64_t clip_norm_violations = 0;
  std::uint64_t displacement_violations = 0;

  double final_error() const {
    if (points.empty()) throw std::logic_error("run record holds no recorded points");
    return points.back().error;
  }
};

//! Raised when a gradient source fails mid-run; carries the failing iteration.
class RunAbort : public std::runtime_error {
 public:
  RunAbort(std::size_t iteration, const std::string& what)
      : std::runtime_error("run aborted at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace robustopt
