#pragma once

#include <charconv>
#include <cmath>
#include <string_view>
#include <string>
#include <system_error>

#include "cvbench/error.hpp"

namespace cvbench {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;

  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  [[nodiscard]] constexpr double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Split of a mean photon number into floor, ceil and fractional part.
/// At integer E the fractional part is exactly zero and ceil == floor.
struct EnergySplit {
  int floor = 0;
  int ceil = 0;
  double frac = 0.0;
};

inline EnergySplit split_energy(double energy) {
  detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be finite and >= 0");
  detail::require(energy < 1e9, "energy too large to index Fock levels");
  const double fl = std::floor(energy);
  EnergySplit s;
  s.floor = static_cast<int>(fl);
  s.frac = energy - fl;
  s.ceil = s.frac > 0.0 ? s.floor + 1 : s.floor;
  return s;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  }
  return x;
}

}  // namespace cvbench
