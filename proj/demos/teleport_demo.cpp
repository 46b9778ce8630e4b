// Worst-case input for noisy teleportation at a few energies, with the
// certificate and the truncation sandwich.

#include <cstdio>

#include "cvbench/baselines.hpp"
#include "cvbench/trunc_bounds.hpp"

int main() {
  using namespace cvbench;
  const double xi = 0.25;
  for (double energy : {0.6, 1.2, 1.9, 3.0}) {
    const FidelityResult r = energy_constrained_fidelity(energy, xi, 50);
    std::printf("E=%-4g F_E,50=%.10f  F_E>=%.6f  %s  mu=%.6g gamma=%.6g\n", energy, r.value_truncated,
                r.lower_bound, to_string(r.status), r.certificate.mu, r.certificate.gamma);
    std::printf("        support:");
    for (int n : r.spectrum.support()) std::printf(" p%d=%.8f", n, r.spectrum[static_cast<std::size_t>(n)]);
    std::printf("\n        tmsv=%.6f coherent=%.6f\n", baselines::tmsv_fidelity(energy, xi),
                baselines::coherent_fidelity(xi));
  }
}
