#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace robustopt {

//! Hyperparameters of the rolling-quantile clipped step.
struct ClipConfig {
  double step_size = 1e-3;         // beta
  double quantile_index = 0.2;     // p, in (0, 1)
  std::size_t buffer_capacity = 100;  // S
  double init_threshold = 10.0;    // value pre-filling the buffer at start

  void validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
    if (!(quantile_index > 0.0 && quantile_index < 1.0)) {
      throw std::invalid_argument("quantile_index must lie in (0, 1)");
    }
    if (buffer_capacity < 2) throw std::invalid_argument("buffer_capacity must be at least 2");
    if (!(init_threshold > 0.0)) throw std::invalid_argument("init_threshold must be positive");
  }
};

/*!
 * Fixed-capacity buffer of the most recent gradient norms, kept sorted by
 * value, supporting O(capacity) insertion and O(1) quantile reads.
 *
 * Each entry carries an age: 0 for the value inserted by the latest push,
 * capacity-1 for the one about to be evicted. Construction pre-fills the
 * buffer with capacity-1 copies of init_threshold (ages 1..capacity-1), so
 * the very first push completes it to capacity and every later push replaces
 * the oldest entry in place, followed by one insertion-sort pass. The window
 * therefore always behaves as the last `capacity` values of the stream
 * obtained by prefixing the real values with the synthetic ones.
 */
class QuantileBuffer {
 public:
  struct Entry {
    double value;
    std::size_t age;
  };

  QuantileBuffer(std::size_t capacity, double init_threshold) : capacity_(capacity) {
    if (capacity_ < 2) throw std::invalid_argument("buffer capacity must be at least 2");
    if (!(init_threshold > 0.0)) throw std::invalid_argument("init threshold must be positive");
    entries_.reserve(capacity_);
    for (std::size_t a = 1; a < capacity_; ++a) entries_.push_back({init_threshold, a});
  }

  explicit QuantileBuffer(const ClipConfig& config)
      : QuantileBuffer(config.buffer_capacity, config.init_threshold) {
    config.validate();
  }

  /*!
   * Insert a gradient norm. Returns false and leaves the buffer untouched if
   * the value is not a finite nonnegative number. At capacity, all ages are
   * incremented and the entry reaching age `capacity` is replaced by the new
   * value with age 0.
   */
  bool push(double norm) {
    last_comparisons_ = 0;
    last_moves_ = 0;
    if (!std::isfinite(norm) || norm < 0.0) return false;

    std::size_t pos;
    if (entries_.size() < capacity_) {
      // The completing push after construction: existing ages already occupy
      // 1..capacity-1, so the new entry just takes age 0.
      entries_.push_back({norm, 0});
      pos = entries_.size() - 1;
    } else {
      for (Entry& e : entries_) ++e.age;
      pos = 0;
      while (entries_[pos].age != capacity_) ++pos;
      entries_[pos] = {norm, 0};
    }
    restore_order(pos);
    return true;
  }

  //! Order statistic at 0-indexed rank floor(p * capacity), clamped to the valid range.
  double quantile(double p) const {
    if (entries_.size() != capacity_) {
      throw std::logic_error("quantile read before the buffer reached capacity");
    }
    // The tiny offset recovers the mathematical floor(p*S) when the product of
    // a decimal p with S lands one rounding step below an integer (e.g. 0.94 * 100).
    double rank = std::floor(p * static_cast<double>(capacity_) + 1e-9);
    if (!(rank > 0.0)) rank = 0.0;
    auto idx = static_cast<std::size_t>(rank);
    if (idx >= capacity_) idx = capacity_ - 1;
    return entries_[idx].value;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() == capacity_; }

  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(entries_.size());
    for (const Entry& e : entries_) v.push_back(e.value);
    return v;
  }

  //! Work performed by the most recent push, for cost assertions.
  std::size_t last_push_comparisons() const { return last_comparisons_; }
  std::size_t last_push_moves() const { return last_moves_; }

 private:
  // One insertion-sort pass: bubble the entry at pos to its sorted position.
  void restore_order(std::size_t pos) {
    std::size_t i = pos;
    while (i > 0) {
      ++last_comparisons_;
      if (entries_[i - 1].value > entries_[i].value) {
        std::swap(entries_[i - 1], entries_[i]);
        ++last_moves_;
        --i;
      } else {
        break;
      }
    }
    if (i != pos) return;
    while (i + 1 < entries_.size()) {
      ++last_comparisons_;
      if (entries_[i + 1].value < entries_[i].value) {
        std::swap(entries_[i + 1], entries_[i]);
        ++last_moves_;
        ++i;
      } else {
        break;
      }
    }
  }

  std::size_t capacity_;
  std::vector<Entry> entries_;
  std::size_t last_comparisons_ = 0;
  std::size_t last_moves_ = 0;
};

}  // namespace robustopt
