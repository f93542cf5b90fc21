#pragma once

#include <cmath>
#include <compare>
#include <stdexcept>
#include <string>

namespace sdcam {

/// A value in (-inf, +inf]. Only +inf is representable as non-finite; the
/// infinite state is a tag, not a float, so comparisons against it are exact.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;

  // Implicit so that oracles can `return 0.5 * x.squaredNorm();`.
  ExtendedReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (!std::isfinite(v)) {
      throw std::domain_error("ExtendedReal: non-finite value " + std::to_string(v) +
                              " (use ExtendedReal::infinity())");
    }
  }

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_finite() const { return !infinite_; }
  [[nodiscard]] constexpr bool is_infinite() const { return infinite_; }

  [[nodiscard]] double value() const {
    if (infinite_) throw std::domain_error("ExtendedReal: value() of +inf");
    return value_;
  }

  /// +inf mapped to std::numeric_limits<double>::infinity(); for printing only.
  [[nodiscard]] double to_double() const { return infinite_ ? HUGE_VAL : value_; }

  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedReal(a.value_ + b.value_);
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace sdcam
