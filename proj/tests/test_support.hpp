#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cvbench/spectrum.hpp"

namespace cvbench::testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline SpectrumVector random_spectrum(std::mt19937_64& g, int trunc) {
  std::exponential_distribution<double> w(1.0);
  std::vector<double> p(static_cast<std::size_t>(trunc) + 1);
  double s = 0.0;
  for (auto& x : p) s += (x = w(g));
  for (auto& x : p) x /= s;
  return SpectrumVector(std::move(p));
}

}  // namespace cvbench::testing
