#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ggflow {

/// A value in [-inf, +inf] with the measure-theoretic product convention 0 * (+-inf) = 0.
///
/// Infinite values are ordinary results here (an infinite action, an infinite
/// Fisher information), not errors. The only undefined operation is
/// (+inf) + (-inf), which throws std::domain_error.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double x) : x_(x) {}  // NOLINT: implicit conversion from double

  static constexpr ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
  static constexpr ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(x_); }
  bool is_pos_inf() const { return std::isinf(x_) && x_ > 0; }
  bool is_neg_inf() const { return std::isinf(x_) && x_ < 0; }

  /// The finite value, or +-infinity.
  constexpr double value() const { return x_; }

  friend ExtReal operator-(ExtReal a) { return ExtReal(-a.x_); }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (std::isinf(a.x_) && std::isinf(b.x_) && (a.x_ > 0) != (b.x_ > 0))
      throw std::domain_error("ExtReal: (+inf) + (-inf) is undefined");
    return ExtReal(a.x_ + b.x_);
  }
  friend ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }

  friend ExtReal operator*(ExtReal a, ExtReal b) {
    if (a.x_ == 0.0 || b.x_ == 0.0) return ExtReal(0.0);
    return ExtReal(a.x_ * b.x_);
  }

  ExtReal& operator+=(ExtReal b) { return *this = *this + b; }

  friend bool operator==(ExtReal a, ExtReal b) { return a.x_ == b.x_; }
  friend auto operator<=>(ExtReal a, ExtReal b) { return a.x_ <=> b.x_; }

  friend std::ostream& operator<<(std::ostream& os, ExtReal a) {
    if (a.is_pos_inf()) return os << "+inf";
    if (a.is_neg_inf()) return os << "-inf";
    return os << a.x_;
  }

 private:
  double x_ = 0.0;
};

}  // namespace ggflow
