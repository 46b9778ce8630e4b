#pragma once

#include <cmath>

#include "cvbench/error.hpp"
#include "cvbench/fock_kernel.hpp"

namespace cvbench {

/// min p^T G p  s.t.  p >= 0, sum p = 1, sum n p_n <= E  over Fock levels 0..M.
class QpProblem {
 public:
  QpProblem(KernelMatrix kernel, double energy) : kernel_(std::move(kernel)), energy_(energy) {
    detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be finite and >= 0");
  }

  static QpProblem teleportation(double energy, double xi, int trunc) {
    return {build_kernel(trunc, xi), energy};
  }

  [[nodiscard]] const KernelMatrix& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double energy() const noexcept { return energy_; }
  [[nodiscard]] double xi() const noexcept { return kernel_.xi(); }
  [[nodiscard]] int trunc() const noexcept { return kernel_.trunc(); }

  /// With E >= M the energy constraint can never bind on a normalized spectrum.
  [[nodiscard]] bool energy_vacuous() const noexcept {
    return energy_ >= static_cast<double>(trunc());
  }

 private:
  KernelMatrix kernel_;
  double energy_;
};

}  // namespace cvbench
