#pragma once

// Fock-space fidelity kernel for the additive-noise channel acting on
// twin-Fock inputs:
//
//   G(n, m, xi) = sum_{k=0}^{min(n,m)} C(n,k) C(m,k) xi^{2k} / (1+xi)^{n+m+1}
//
// f(p) = p^T G p is the output fidelity of the input with spectrum p, and
// 2G is the Hessian of the quadratic program solved in qp_solver.hpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cvbench/error.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench {

inline constexpr int kDefaultKernelCap = 2048;

namespace detail {

// Largest index for which the plain term recurrence is used.
inline constexpr int kDirectKernelLimit = 60;

/// log(n!) for n up to a fixed table size; computed on the fly past it.
inline double log_factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(2 * kDefaultKernelCap + 2);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (static_cast<std::size_t>(n) < table.size()) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_binomial(int n, int k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// term_{k+1} = term_k (n-k)(m-k) xi^2 / (k+1)^2, term_0 = 1.
inline double g_kernel_direct(int n, int m, double xi) {
  const int kmax = std::min(n, m);
  const double xi2 = xi * xi;
  CompensatedSum sum;
  double term = 1.0;
  sum += term;
  for (int k = 0; k < kmax && term != 0.0; ++k) {
    const double kp1 = static_cast<double>(k + 1);
    term *= static_cast<double>(n - k) * static_cast<double>(m - k) * xi2 / (kp1 * kp1);
    sum += term;
  }
  if (n + m == 0) return 1.0 / (1.0 + xi);
  return sum.value() * std::exp(-static_cast<double>(n + m + 1) * std::log1p(xi));
}

// Each term kept as a logarithm, combined with a max shift.
inline double g_kernel_log(int n, int m, double xi) {
  const double prefactor = -static_cast<double>(n + m + 1) * std::log1p(xi);
  if (xi == 0.0) return std::exp(prefactor);
  const int kmax = std::min(n, m);
  const double two_log_xi = 2.0 * std::log(xi);
  std::vector<double> logs(static_cast<std::size_t>(kmax) + 1);
  double lmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kmax; ++k) {
    const double l = log_binomial(n, k) + log_binomial(m, k) + k * two_log_xi;
    logs[static_cast<std::size_t>(k)] = l;
    lmax = std::max(lmax, l);
  }
  CompensatedSum sum;
  for (double l : logs) sum += std::exp(l - lmax);
  return std::exp(lmax + std::log(sum.value()) + prefactor);
}

}  // namespace detail

/// Kernel entry G(n, m, xi). Symmetric in (n, m); equal to 1 for xi = 0.
inline double g_kernel(int n, int m, double xi) {
  detail::require(n >= 0 && m >= 0, "Fock indices must be nonnegative");
  detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be finite and >= 0");
  if (n > m) std::swap(n, m);
  if (m <= detail::kDirectKernelLimit) {
    const double g = detail::g_kernel_direct(n, m, xi);
    if (std::isfinite(g) && g > 0.0) return g;
  }
  return detail::g_kernel_log(n, m, xi);
}

/// Terminating Gauss series 2F1(-a, -b; c; z) for nonnegative integers a, b.
inline double hyp2f1_terminating(int a, int b, double c, double z) {
  detail::require(a >= 0 && b >= 0, "terminating 2F1 needs nonpositive integer upper parameters");
  detail::require(c > 0.0, "lower parameter must be positive");
  const int kmax = std::min(a, b);
  CompensatedSum sum;
  double term = 1.0;
  sum += term;
  for (int k = 0; k < kmax; ++k) {
    // (-a+k)(-b+k) / ((c+k)(k+1)) * z
    term *= (static_cast<double>(k - a) * static_cast<double>(k - b)) /
            ((c + k) * static_cast<double>(k + 1)) * z;
    sum += term;
  }
  return sum.value();
}

/// G(n, m, xi) through its hypergeometric form 2F1(-m, -n; 1; xi^2) / (1+xi)^{n+m+1}.
inline double g_kernel_hypergeometric(int n, int m, double xi) {
  detail::require(n >= 0 && m >= 0, "Fock indices must be nonnegative");
  detail::require(xi >= 0.0, "xi must be >= 0");
  return hyp2f1_terminating(m, n, 1.0, xi * xi) /
         std::pow(1.0 + xi, static_cast<double>(n + m + 1));
}

/// Dense (M+1)x(M+1) matrix of G(n, m, xi). Immutable; copies share storage.
class KernelMatrix {
 public:
  KernelMatrix(Eigen::MatrixXd entries, double xi)
      : entries_(std::make_shared<const Eigen::MatrixXd>(std::move(entries))), xi_(xi) {
    if (entries_->rows() != entries_->cols() || entries_->rows() == 0) {
      throw DimensionMismatch("kernel matrix must be square and nonempty");
    }
  }

  [[nodiscard]] double xi() const noexcept { return xi_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return entries_->rows(); }
  [[nodiscard]] int trunc() const noexcept { return static_cast<int>(entries_->rows()) - 1; }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return *entries_; }
  double operator()(Eigen::Index n, Eigen::Index m) const { return (*entries_)(n, m); }

 private:
  std::shared_ptr<const Eigen::MatrixXd> entries_;
  double xi_;
};

inline KernelMatrix build_kernel(int trunc, double xi, int cap = kDefaultKernelCap) {
  detail::require(trunc >= 0, "truncation must be >= 0");
  detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be finite and >= 0");
  if (trunc > cap) {
    throw ResourceLimit("truncation " + std::to_string(trunc) + " exceeds kernel cap " +
                        std::to_string(cap));
  }
  const Eigen::Index dim = trunc + 1;
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    for (Eigen::Index m = n; m < dim; ++m) {
      const double v = g_kernel(static_cast<int>(n), static_cast<int>(m), xi);
      g(n, m) = v;
      g(m, n) = v;
    }
  }
  return KernelMatrix(std::move(g), xi);
}

namespace detail {

inline void check_dims(const SpectrumVector& p, const KernelMatrix& kernel) {
  if (static_cast<Eigen::Index>(p.size()) != kernel.dim()) {
    throw DimensionMismatch("spectrum has " + std::to_string(p.size()) +
                            " levels but kernel has dimension " + std::to_string(kernel.dim()));
  }
}

// Row n of G p, compensated.
inline double kernel_row_dot(const KernelMatrix& kernel, Eigen::Index n,
                             std::span<const double> p) {
  CompensatedSum s;
  const auto& g = kernel.matrix();
  for (Eigen::Index m = 0; m < kernel.dim(); ++m) {
    if (p[static_cast<std::size_t>(m)] != 0.0) s += g(n, m) * p[static_cast<std::size_t>(m)];
  }
  return s.value();
}

}  // namespace detail

/// f(p) = sum_{n,m} p_n p_m G(n, m, xi).
inline double objective(const SpectrumVector& p, const KernelMatrix& kernel) {
  detail::check_dims(p, kernel);
  const auto probs = p.probs();
  CompensatedSum total;
  for (Eigen::Index n = 0; n < kernel.dim(); ++n) {
    const double pn = probs[static_cast<std::size_t>(n)];
    if (pn != 0.0) total += pn * detail::kernel_row_dot(kernel, n, probs);
  }
  return total.value();
}

/// grad f(p) = 2 G p.
inline Eigen::VectorXd gradient(const SpectrumVector& p, const KernelMatrix& kernel) {
  detail::check_dims(p, kernel);
  Eigen::VectorXd grad(kernel.dim());
  for (Eigen::Index n = 0; n < kernel.dim(); ++n) {
    grad(n) = 2.0 * detail::kernel_row_dot(kernel, n, p.probs());
  }
  return grad;
}

/// Photon statistics after a beamsplitter that keeps each photon with
/// probability `kept`: q_k = sum_{n>=k} p_n C(n,k) kept^k (1-kept)^{n-k}.
inline SpectrumVector pure_loss_spectrum(const SpectrumVector& p, double kept) {
  detail::require(kept >= 0.0 && kept <= 1.0, "transmissivity must lie in [0, 1]");
  const auto norm = p.normalized() ? Normalization::Normalized : Normalization::Unnormalized;
  if (kept == 1.0) return p;
  std::vector<double> q(p.size(), 0.0);
  if (kept == 0.0) {
    q[0] = p.mass();
    return SpectrumVector(std::move(q), norm);
  }
  const double log_kept = std::log(kept);
  const double log_lost = std::log1p(-kept);
  for (std::size_t k = 0; k < q.size(); ++k) {
    CompensatedSum s;
    for (std::size_t n = k; n < p.size(); ++n) {
      if (p[n] == 0.0) continue;
      const int ni = static_cast<int>(n);
      const int ki = static_cast<int>(k);
      const double log_pmf = detail::log_binomial(ni, ki) + ki * log_kept + (ni - ki) * log_lost;
      s += p[n] * std::exp(log_pmf);
    }
    q[k] = s.value();
  }
  return SpectrumVector(std::move(q), norm);
}

}  // namespace cvbench
