#pragma once

#include <cmath>
#include <vector>

#include "cvbench/error.hpp"
#include "cvbench/qp_solver.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench::baselines {

/// Coherent-state input: 1/(1+xi), whatever the amplitude. Coherent states are
/// not number-diagonal, so this never goes through the kernel.
inline double coherent_fidelity(double xi) {
  cvbench::detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be >= 0");
  return 1.0 / (1.0 + xi);
}

/// Two-mode squeezed vacuum with mean photon number E: 1/(1+(2E+1) xi).
inline double tmsv_fidelity(double energy, double xi) {
  cvbench::detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
  cvbench::detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be >= 0");
  return 1.0 / (1.0 + (2.0 * energy + 1.0) * xi);
}

struct TmsvSpectrum {
  SpectrumVector spectrum;  // unnormalized: levels 0..M only
  double tail = 0.0;        // weight above M, (E/(E+1))^{M+1}
};

/// Thermal-like spectrum E^n/(E+1)^{n+1} cut at M. Never renormalized.
inline TmsvSpectrum tmsv_spectrum(double energy, int trunc) {
  cvbench::detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
  cvbench::detail::require(trunc >= 0, "truncation must be >= 0");
  const double ratio = energy / (energy + 1.0);
  std::vector<double> p(static_cast<std::size_t>(trunc) + 1);
  double w = 1.0 / (energy + 1.0);
  for (auto& x : p) {
    x = w;
    w *= ratio;
  }
  return {SpectrumVector(std::move(p), Normalization::Unnormalized),
          std::pow(ratio, static_cast<double>(trunc) + 1.0)};
}

struct BaselineReport {
  double coherent_fid = 0.0;
  double tmsv_fid = 0.0;
  double optimal_fid = 0.0;
  double energy = 0.0;
  double xi = 0.0;
  SolveStatus status = SolveStatus::MaxIterations;

  /// tmsv - optimal; how far the squeezed-vacuum test is from the worst case.
  [[nodiscard]] double tmsv_gap() const noexcept { return tmsv_fid - optimal_fid; }
  [[nodiscard]] bool ordered() const noexcept {
    return optimal_fid <= tmsv_fid && tmsv_fid <= coherent_fid;
  }
};

inline BaselineReport compare(double energy, double xi, int trunc,
                              const SolveOptions& opts = {}) {
  const QpSolution sol = solve(QpProblem::teleportation(energy, xi, trunc), opts);
  return {coherent_fidelity(xi), tmsv_fidelity(energy, xi), sol.value, energy, xi, sol.status};
}

}  // namespace cvbench::baselines
