#pragma once

// Two-sided bounds on the untruncated energy-constrained fidelity F_E from the
// truncated optimum F_{E,M}:
//
//   1 - (2 sqrt(E/(M+1)) + sqrt(1 - F_{E,M}))^2  <=  F_E  <=  F_{E,M}

#include <algorithm>
#include <cmath>
#include <optional>

#include "cvbench/error.hpp"
#include "cvbench/fock_kernel.hpp"
#include "cvbench/kkt_certify.hpp"
#include "cvbench/qp_solver.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench {

namespace truncation {

namespace detail {

inline void check_inputs(double f_trunc, double energy, int trunc) {
  cvbench::detail::require(f_trunc >= 0.0 && f_trunc <= 1.0, "truncated fidelity must be in [0, 1]");
  cvbench::detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
  cvbench::detail::require(trunc >= 0, "truncation must be >= 0");
}

inline double raw_lower_bound(double f_trunc, double energy, int trunc) {
  const double leak = 2.0 * std::sqrt(energy / (static_cast<double>(trunc) + 1.0));
  const double s = leak + std::sqrt(1.0 - f_trunc);
  return 1.0 - s * s;
}

}  // namespace detail

inline double lower_bound(double f_trunc, double energy, int trunc) {
  detail::check_inputs(f_trunc, energy, trunc);
  return std::clamp(detail::raw_lower_bound(f_trunc, energy, trunc), 0.0, 1.0);
}

/// True when the unclamped bound is nonpositive, i.e. says nothing.
inline bool lower_bound_vacuous(double f_trunc, double energy, int trunc) {
  detail::check_inputs(f_trunc, energy, trunc);
  return detail::raw_lower_bound(f_trunc, energy, trunc) <= 0.0;
}

/// Guaranteed weight 1 - E/(M+1) of any energy-E state inside levels 0..M.
inline double projector_mass_bound(double energy, int trunc) {
  cvbench::detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be >= 0");
  cvbench::detail::require(trunc >= 0, "truncation must be >= 0");
  return std::max(0.0, 1.0 - energy / (static_cast<double>(trunc) + 1.0));
}

enum class TruncationStatus { Reached, CapReached };

struct TruncationChoice {
  int trunc = 0;
  double gap = 0.0;  // value_truncated - lower_bound at `trunc`
  TruncationStatus status = TruncationStatus::Reached;
};

/// Smallest M whose sandwich gap is at most gap_target. Doubles M until the
/// target is met, then bisects between the last failing and first passing M.
inline TruncationChoice choose_truncation(double energy, double xi, double gap_target,
                                          int cap = kDefaultKernelCap,
                                          const SolveOptions& opts = {}) {
  cvbench::detail::require(gap_target > 0.0 && gap_target <= 1.0, "gap target must be in (0, 1]");
  cvbench::detail::require(cap >= 0, "cap must be >= 0");
  auto gap_at = [&](int m) {
    const QpSolution sol = solve(QpProblem::teleportation(energy, xi, m), opts);
    const double f = std::clamp(sol.value, 0.0, 1.0);
    return f - lower_bound(f, energy, m);
  };

  TruncationChoice best{0, gap_at(0), TruncationStatus::CapReached};
  if (best.gap <= gap_target) return {0, best.gap, TruncationStatus::Reached};

  int failing = 0;
  int passing = -1;
  double passing_gap = 0.0;
  for (int m = 1;; m = std::min(2 * m, cap)) {
    const double gap = gap_at(m);
    if (gap < best.gap) best = {m, gap, TruncationStatus::CapReached};
    if (gap <= gap_target) {
      passing = m;
      passing_gap = gap;
      break;
    }
    failing = m;
    if (m == cap) return best;
  }
  while (passing - failing > 1) {
    const int mid = failing + (passing - failing) / 2;
    const double gap = gap_at(mid);
    if (gap <= gap_target) {
      passing = mid;
      passing_gap = gap;
    } else {
      failing = mid;
    }
  }
  return {passing, passing_gap, TruncationStatus::Reached};
}

}  // namespace truncation

/// Truncated optimum together with its certified sandwich on F_E.
struct FidelityResult {
  double value_truncated = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  bool lower_bound_vacuous = false;
  int trunc = 0;
  double energy = 0.0;
  double xi = 0.0;
  SpectrumVector spectrum;
  KktCertificate certificate;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  std::string notes;
};

inline FidelityResult energy_constrained_fidelity(double energy, double xi, int trunc,
                                                  const SolveOptions& opts = {}) {
  const QpSolution sol = solve(QpProblem::teleportation(energy, xi, trunc), opts);
  FidelityResult r;
  r.value_truncated = sol.value;
  r.upper_bound = sol.value;
  const double f = std::clamp(sol.value, 0.0, 1.0);
  r.lower_bound = std::min(truncation::lower_bound(f, energy, trunc), sol.value);
  r.lower_bound_vacuous = truncation::lower_bound_vacuous(f, energy, trunc);
  r.trunc = trunc;
  r.energy = energy;
  r.xi = xi;
  r.spectrum = sol.spectrum;
  r.certificate = sol.certificate;
  r.status = sol.status;
  r.iterations = sol.iterations;
  r.notes = sol.notes;
  return r;
}

}  // namespace cvbench
