#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvbench/error.hpp"
#include "cvbench/numeric.hpp"

namespace cvbench {

namespace tolerance {
inline constexpr double negative_weight = -1e-12;
inline constexpr double normalization = 1e-10;
}  // namespace tolerance

enum class Normalization { Normalized, Unnormalized };

/// Photon-number distribution p_0..p_M of the channel-side marginal of a
/// twin-Fock input. The QP variable everywhere in this library.
class SpectrumVector {
 public:
  SpectrumVector() : probs_{1.0} {}

  explicit SpectrumVector(std::vector<double> probs,
                          Normalization norm = Normalization::Normalized)
      : probs_(std::move(probs)), normalized_(norm == Normalization::Normalized) {
    detail::require(!probs_.empty(), "spectrum needs at least one Fock level");
    for (double p : probs_) {
      detail::require(std::isfinite(p), "spectrum weights must be finite");
      detail::require(p >= tolerance::negative_weight, "spectrum weights must be nonnegative");
    }
    if (normalized_) {
      detail::require(std::abs(mass() - 1.0) <= tolerance::normalization,
                      "normalized spectrum must sum to 1 (got " + format_double(mass()) + ")");
    }
  }

  static SpectrumVector vacuum(int trunc) { return fock(0, trunc); }

  static SpectrumVector fock(int level, int trunc) {
    detail::require(level >= 0 && level <= trunc, "Fock level outside truncation");
    std::vector<double> p(static_cast<std::size_t>(trunc) + 1, 0.0);
    p[static_cast<std::size_t>(level)] = 1.0;
    return SpectrumVector(std::move(p));
  }

  [[nodiscard]] int trunc() const noexcept { return static_cast<int>(probs_.size()) - 1; }
  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] bool normalized() const noexcept { return normalized_; }

  double operator[](std::size_t n) const { return probs_[n]; }
  [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return probs_; }

  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> vec() const {
    return {probs_.data(), static_cast<Eigen::Index>(probs_.size())};
  }

  [[nodiscard]] double mass() const {
    CompensatedSum s;
    for (double p : probs_) s += p;
    return s.value();
  }

  /// Mean photon number sum_n n p_n.
  [[nodiscard]] double energy() const {
    CompensatedSum s;
    for (std::size_t n = 1; n < probs_.size(); ++n) s += static_cast<double>(n) * probs_[n];
    return s.value();
  }

  [[nodiscard]] std::vector<int> support(double threshold = 1e-8) const {
    std::vector<int> s;
    for (std::size_t n = 0; n < probs_.size(); ++n) {
      if (probs_[n] > threshold) s.push_back(static_cast<int>(n));
    }
    return s;
  }

  /// Zero-extends (or checks-and-drops zero tail) to a new truncation.
  [[nodiscard]] SpectrumVector with_trunc(int trunc) const {
    detail::require(trunc >= 0, "truncation must be >= 0");
    std::vector<double> p(static_cast<std::size_t>(trunc) + 1, 0.0);
    for (std::size_t n = 0; n < probs_.size(); ++n) {
      if (n < p.size()) {
        p[n] = probs_[n];
      } else {
        detail::require(probs_[n] == 0.0, "cannot drop nonzero weight when shrinking truncation");
      }
    }
    return SpectrumVector(std::move(p),
                          normalized_ ? Normalization::Normalized : Normalization::Unnormalized);
  }

 private:
  std::vector<double> probs_;
  bool normalized_ = true;
};

/// Governing channel parameter plus input energy budget.
struct NoiseModel {
  enum class Kind { AdditiveNoise, Loss };

  Kind kind = Kind::AdditiveNoise;
  double parameter = 0.0;  // xi for AdditiveNoise, eta for Loss
  double energy = 0.0;

  static NoiseModel additive(double xi, double energy) {
    detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be >= 0");
    detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
    return {Kind::AdditiveNoise, xi, energy};
  }

  static NoiseModel loss(double eta, double energy) {
    detail::require(eta >= 0.0 && eta <= 1.0, "eta must lie in [0, 1]");
    detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
    return {Kind::Loss, eta, energy};
  }

  /// eta = 1/(1+xi) for the additive-noise channel; eta itself for loss.
  [[nodiscard]] double transmissivity() const noexcept {
    return kind == Kind::AdditiveNoise ? 1.0 / (1.0 + parameter) : parameter;
  }
};

}  // namespace cvbench
