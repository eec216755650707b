#pragma once

#include <cmath>
#include <span>

namespace hypereval {

/// Neumaier compensated summation. Order of `add` calls is significant for
/// bitwise reproducibility, so callers iterate in a fixed order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

template <typename T>
double compensated_sum(std::span<const T> values) noexcept {
  CompensatedSum acc;
  for (const T v : values) acc.add(static_cast<double>(v));
  return acc.value();
}

}  // namespace hypereval
