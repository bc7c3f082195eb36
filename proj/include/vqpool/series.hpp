#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vqpool/errors.hpp"

namespace vqpool {

/// Ordered per-frame quality scores of one video. Entries are finite by
/// construction; an empty series only exists as a default-constructed
/// placeholder and is rejected by every pooling operation.
class FrameScoreSeries {
 public:
  FrameScoreSeries() = default;

  explicit FrameScoreSeries(std::vector<double> scores) : scores_(std::move(scores)) {
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      if (!std::isfinite(scores_[i])) {
        throw invalid_input_error("frame score at index " + std::to_string(i) +
                                  " is not finite");
      }
    }
  }

  std::size_t size() const noexcept { return scores_.size(); }
  bool empty() const noexcept { return scores_.empty(); }
  double operator[](std::size_t i) const { return scores_[i]; }
  std::span<const double> values() const noexcept { return scores_; }

  double front() const { return scores_.front(); }
  double back() const { return scores_.back(); }

  auto begin() const noexcept { return scores_.begin(); }
  auto end() const noexcept { return scores_.end(); }

  friend bool operator==(const FrameScoreSeries&, const FrameScoreSeries&) = default;

 private:
  std::vector<double> scores_;
};

inline FrameScoreSeries reversed(const FrameScoreSeries& s) {
  std::vector<double> v(s.begin(), s.end());
  std::reverse(v.begin(), v.end());
  return FrameScoreSeries(std::move(v));
}

}  // namespace vqpool
