#pragma once

// Lossy photodetector benchmarks: ideal number measurement P versus
// P o L^eta (pure loss of transmissivity eta before the measurement).

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvbench/error.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench::detector {

namespace detail {

inline void check_eta(double eta) {
  cvbench::detail::require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0,
                           "transmissivity must lie in [0, 1]");
}

// (1-{E}) x^floor(E) + {E} x^ceil(E), with 0^0 = 1.
inline double two_level_average(double x, const EnergySplit& s) {
  return (1.0 - s.frac) * std::pow(x, s.floor) + s.frac * std::pow(x, s.ceil);
}

}  // namespace detail

/// Transmissivity from a loss figure in dB: eta = 10^(-dB/10).
inline double eta_from_db(double loss_db) {
  cvbench::detail::require(std::isfinite(loss_db) && loss_db >= 0.0, "loss in dB must be >= 0");
  return std::pow(10.0, -loss_db / 10.0);
}

/// Half the energy-constrained diamond norm between P and P o L^eta.
inline double diamond_distance(double eta, double energy) {
  detail::check_eta(eta);
  const EnergySplit s = split_energy(energy);
  return 1.0 - detail::two_level_average(eta, s);
}

/// Mixed number state attaining diamond_distance; no reference system needed.
inline SpectrumVector optimal_detector_state(double energy) {
  const EnergySplit s = split_energy(energy);
  std::vector<double> p(static_cast<std::size_t>(s.ceil) + 1, 0.0);
  p[static_cast<std::size_t>(s.floor)] += 1.0 - s.frac;
  p[static_cast<std::size_t>(s.ceil)] += s.frac;
  return SpectrumVector(std::move(p));
}

/// Inner objective 1 - sum_n lambda_n eta^n for a number-diagonal input.
inline double detection_error(const SpectrumVector& lambda, double eta) {
  detail::check_eta(eta);
  CompensatedSum s;
  for (std::size_t n = 0; n < lambda.size(); ++n) {
    if (lambda[n] != 0.0) s += lambda[n] * std::pow(eta, static_cast<int>(n));
  }
  return 1.0 - s.value();
}

class DetectorPair {
 public:
  DetectorPair(double eta1, double eta2, double energy) : eta1_(eta1), eta2_(eta2), energy_(energy) {
    detail::check_eta(eta1);
    detail::check_eta(eta2);
    cvbench::detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
  }

  [[nodiscard]] double eta1() const noexcept { return eta1_; }
  [[nodiscard]] double eta2() const noexcept { return eta2_; }
  [[nodiscard]] double energy() const noexcept { return energy_; }

  /// sqrt(eta1 eta2) + sqrt((1-eta1)(1-eta2)); exactly 1 iff eta1 == eta2.
  [[nodiscard]] double overlap() const noexcept {
    if (eta1_ == eta2_) return 1.0;
    const double mu = std::sqrt(eta1_ * eta2_) + std::sqrt((1.0 - eta1_) * (1.0 - eta2_));
    return std::min(mu, std::nextafter(1.0, 0.0));
  }

 private:
  double eta1_;
  double eta2_;
  double energy_;
};

/// Energy-constrained sine distance between two lossy photodetectors.
inline double sine_distance(const DetectorPair& pair) {
  const EnergySplit s = split_energy(pair.energy());
  const double avg = detail::two_level_average(pair.overlap(), s);
  return std::sqrt(std::max(0.0, 1.0 - avg * avg));
}

/// max 1 - sum lambda_n eta^n over lambda >= 0, sum lambda = 1, sum n lambda_n <= E,
/// levels 0..M, by enumerating every basic feasible solution (one or two
/// nonzero weights, any pair of levels).
inline double lp_oracle_diamond(double eta, double energy, int trunc) {
  detail::check_eta(eta);
  const EnergySplit s = split_energy(energy);
  if (trunc < s.ceil) {
    throw InvalidArgument("truncation " + std::to_string(trunc) + " is below ceil(E) = " +
                          std::to_string(s.ceil));
  }
  double best = -std::numeric_limits<double>::infinity();
  auto value = [&](int i, double wi, int j, double wj) {
    return 1.0 - (wi * std::pow(eta, i) + wj * std::pow(eta, j));
  };
  for (int i = 0; i <= trunc; ++i) {
    if (static_cast<double>(i) <= energy) best = std::max(best, value(i, 1.0, i, 0.0));
    for (int j = i + 1; j <= trunc; ++j) {
      // weight w on level j, 1-w on level i; energy i + w (j - i) <= E.
      if (static_cast<double>(i) > energy) continue;
      const double w_max = std::min(1.0, (energy - static_cast<double>(i)) / static_cast<double>(j - i));
      best = std::max(best, value(i, 1.0 - w_max, j, w_max));
    }
  }
  return best;
}

}  // namespace cvbench::detector
