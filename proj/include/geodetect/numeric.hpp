#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace geodetect {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs) noexcept;

/// Standard normal CDF.
inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * M_SQRT1_2);
}

/// Standard normal survival P(Z > x).
inline double normal_sf(double x) noexcept {
  return 0.5 * std::erfc(x * M_SQRT1_2);
}

/// Inverse standard normal CDF, Wichura's AS241 (PPND16), accurate to about
/// 1e-16 relative on (0,1).
double normal_quantile(double p) noexcept;

/// z with P(Z > z) = p.
inline double normal_upper_quantile(double p) noexcept {
  return -normal_quantile(p);
}

/// Running mean / variance (Welford), combinable in a fixed order.
struct MomentAccumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  void merge(const MomentAccumulator& o) noexcept;
  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double std_error() const noexcept {
    return count > 0 ? std::sqrt(variance() / static_cast<double>(count))
                     : 0.0;
  }
};

/// Binomial proportion with its standard error.
struct Proportion {
  double value = 0.0;
  double std_error = 0.0;
};

inline Proportion proportion(std::size_t hits, std::size_t trials) noexcept {
  if (trials == 0) return {};
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

inline double binomial_coefficient(std::size_t n, std::size_t k) noexcept {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

}  // namespace geodetect
