#pragma once

// KKT certificates for the energy-constrained fidelity QP.
//
// Lagrangian:  L(p, mu, beta, gamma) = f(p) + mu (sum n p_n - E) - sum beta_n p_n + gamma (sum p_n - 1)
// Stationarity:  2 (G p)_n + mu n - beta_n + gamma = 0  for every level n.
//
// The problem is convex, so a candidate whose reconstructed duals satisfy all
// conditions within tolerance is a global minimizer. Duals come either from a
// reconstruction on the candidate's support (certify) or from caller-supplied
// closed forms (evaluate_certificate, the analytic families below).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvbench/error.hpp"
#include "cvbench/fock_kernel.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/qp_problem.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench {

enum class CertificateStatus { Certified, Rejected, Degenerate };

inline const char* to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Certified: return "Certified";
    case CertificateStatus::Rejected: return "Rejected";
    case CertificateStatus::Degenerate: return "DegenerateCertificate";
  }
  return "unknown";
}

struct KktTolerances {
  double primal = 1e-12;
  double stationarity = 1e-9;
  double dual = 1e-12;  // allowed negativity of mu and beta_n
  double support = 1e-8;
  double energy_active = 1e-10;
};

struct KktCertificate {
  double mu = 0.0;
  double gamma = 0.0;
  std::vector<double> betas;

  double stationarity_residual = 0.0;
  double slackness_residual = 0.0;
  double primal_residual = 0.0;
  double dual_violation = 0.0;

  double primal_value = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;

  bool energy_active = false;
  std::vector<int> support;
  CertificateStatus status = CertificateStatus::Rejected;

  [[nodiscard]] bool certified() const noexcept { return status == CertificateStatus::Certified; }

  [[nodiscard]] double max_residual() const noexcept {
    return std::max({stationarity_residual, slackness_residual, primal_residual, dual_violation,
                     std::abs(duality_gap)});
  }
};

namespace detail {

inline double primal_residual(const SpectrumVector& p, double energy) {
  double r = std::abs(p.mass() - 1.0);
  r = std::max(r, p.energy() - energy);
  for (double x : p.probs()) r = std::max(r, -x);
  return r;
}

// Fills betas, residuals and status from (mu, gamma). Betas are zero on the
// support and read off the stationarity rows elsewhere.
inline KktCertificate finish_certificate(const QpProblem& problem, const SpectrumVector& p,
                                         const Eigen::VectorXd& grad, std::vector<int> support,
                                         bool energy_active, double mu, double gamma,
                                         const KktTolerances& tol) {
  KktCertificate c;
  c.mu = mu;
  c.gamma = gamma;
  c.energy_active = energy_active;
  c.support = std::move(support);
  const auto dim = static_cast<std::size_t>(grad.size());
  std::vector<char> on_support(dim, 0);
  for (int n : c.support) on_support[static_cast<std::size_t>(n)] = 1;

  c.betas.assign(dim, 0.0);
  for (std::size_t n = 0; n < dim; ++n) {
    const double row = grad(static_cast<Eigen::Index>(n)) + mu * static_cast<double>(n) + gamma;
    if (on_support[n]) {
      c.stationarity_residual = std::max(c.stationarity_residual, std::abs(row));
    } else {
      c.betas[n] = row;
    }
  }

  const double energy = p.energy();
  const double slack = problem.energy() - energy;
  c.primal_residual = primal_residual(p, problem.energy());
  c.dual_violation = std::max(0.0, -mu);
  c.slackness_residual = std::abs(mu * slack);
  CompensatedSum beta_p;
  for (std::size_t n = 0; n < dim; ++n) {
    c.dual_violation = std::max(c.dual_violation, -c.betas[n]);
    c.slackness_residual = std::max(c.slackness_residual, std::abs(c.betas[n] * p[n]));
    beta_p += c.betas[n] * p[n];
  }

  c.primal_value = objective(p, problem.kernel());
  // Lagrangian at the candidate; equals the dual function when stationarity is exact.
  c.dual_value = c.primal_value - mu * slack - beta_p.value() + gamma * (p.mass() - 1.0);
  c.duality_gap = c.primal_value - c.dual_value;

  const bool ok = c.primal_residual <= tol.primal && c.stationarity_residual <= tol.stationarity &&
                  c.dual_violation <= tol.dual && c.slackness_residual <= tol.stationarity &&
                  std::abs(c.duality_gap) <= tol.stationarity;
  c.status = ok ? CertificateStatus::Certified : CertificateStatus::Rejected;
  return c;
}

inline void check_candidate(const QpProblem& problem, const SpectrumVector& p,
                            const KktTolerances& tol) {
  if (p.trunc() != problem.trunc()) {
    throw DimensionMismatch("candidate truncation " + std::to_string(p.trunc()) +
                            " does not match problem truncation " +
                            std::to_string(problem.trunc()));
  }
  const double r = primal_residual(p, problem.energy());
  if (r > tol.primal) {
    throw InfeasibleCandidate("candidate violates the constraints by " + format_double(r));
  }
}

}  // namespace detail

/// Reconstructs duals from the candidate's support and checks every KKT condition.
///
/// With the energy constraint slack, mu = 0 and gamma is the least-squares fit
/// of the support rows. With it active and at least two support levels,
/// (mu, gamma) is the least-squares fit of those rows, rank-checked. A single
/// active support level leaves mu underdetermined by the support rows alone;
/// then mu is the smallest nonnegative value keeping every off-support beta_n
/// nonnegative.
inline KktCertificate certify(const QpProblem& problem, const SpectrumVector& candidate,
                              const KktTolerances& tol = {}) {
  detail::check_candidate(problem, candidate, tol);
  const Eigen::VectorXd grad = gradient(candidate, problem.kernel());
  std::vector<int> support = candidate.support(tol.support);
  if (support.empty()) {
    KktCertificate c;
    c.status = CertificateStatus::Degenerate;
    return c;
  }
  const bool active = problem.energy() - candidate.energy() <= tol.energy_active;

  double mu = 0.0;
  double gamma = 0.0;
  if (!active) {
    CompensatedSum s;
    for (int n : support) s += grad(n);
    gamma = -s.value() / static_cast<double>(support.size());
  } else if (support.size() >= 2) {
    const auto rows = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd a(rows, 2);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const int n = support[static_cast<std::size_t>(i)];
      a(i, 0) = static_cast<double>(n);
      a(i, 1) = 1.0;
      b(i) = -grad(n);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 2) {
      KktCertificate c = detail::finish_certificate(problem, candidate, grad, std::move(support),
                                                    active, 0.0, 0.0, tol);
      c.status = CertificateStatus::Degenerate;
      return c;
    }
    const Eigen::Vector2d x = qr.solve(b);
    mu = x(0);
    gamma = x(1);
  } else {
    const int k = support.front();
    double lo = 0.0;
    for (Eigen::Index n = k + 1; n < grad.size(); ++n) {
      lo = std::max(lo, (grad(k) - grad(n)) / static_cast<double>(n - k));
    }
    mu = lo;
    gamma = -grad(k) - static_cast<double>(k) * mu;
  }
  return detail::finish_certificate(problem, candidate, grad, std::move(support), active, mu,
                                    gamma, tol);
}

inline KktCertificate certify(const QpProblem& problem, const SpectrumVector& candidate,
                              double stationarity_tol) {
  KktTolerances tol;
  tol.stationarity = stationarity_tol;
  return certify(problem, candidate, tol);
}

/// Residuals and status for caller-supplied multipliers (mu, gamma).
inline KktCertificate evaluate_certificate(const QpProblem& problem,
                                           const SpectrumVector& candidate, double mu,
                                           double gamma, const KktTolerances& tol = {}) {
  detail::check_candidate(problem, candidate, tol);
  const Eigen::VectorXd grad = gradient(candidate, problem.kernel());
  const bool active = problem.energy() - candidate.energy() <= tol.energy_active;
  return detail::finish_certificate(problem, candidate, grad, candidate.support(tol.support),
                                    active, mu, gamma, tol);
}

struct AnalyticSolution {
  SpectrumVector spectrum;
  KktCertificate certificate;
  double value = 0.0;  // closed-form optimal fidelity
};

namespace detail {

inline std::optional<AnalyticSolution> accept_if_dual_feasible(AnalyticSolution s,
                                                               const KktTolerances& tol) {
  if (s.certificate.dual_violation > tol.dual) return std::nullopt;
  return s;
}

}  // namespace detail

/// Optimum supported on {0, 1}: p = (1-E, E, 0, ...). Empty when some dual is negative.
inline std::optional<AnalyticSolution> analytic_two_point(double energy, double xi,
                                                          int trunc = 50,
                                                          const KktTolerances& tol = {}) {
  detail::require(energy >= 0.0 && energy <= 1.0, "two-point family needs E in [0, 1]");
  detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be >= 0");
  detail::require(trunc >= 1, "two-point family needs truncation >= 1");
  std::vector<double> p(static_cast<std::size_t>(trunc) + 1, 0.0);
  p[0] = 1.0 - energy;
  p[1] = energy;
  SpectrumVector spectrum(std::move(p));

  const double a = 1.0 + xi;
  const double mu = 2.0 * xi * (1.0 - (2.0 * energy - 1.0) * xi) / (a * a * a);
  const double gamma = -2.0 * (1.0 + (1.0 - energy) * xi) / (a * a);
  const double value =
      (1.0 + xi * (2.0 + xi - 2.0 * energy * (1.0 + (1.0 - energy) * xi))) / (a * a * a);

  const QpProblem problem(build_kernel(trunc, xi), energy);
  KktCertificate cert = evaluate_certificate(problem, spectrum, mu, gamma, tol);
  return detail::accept_if_dual_feasible({std::move(spectrum), std::move(cert), value}, tol);
}

/// Optimum supported on {0, 1, 2} with the energy constraint saturated.
inline std::optional<AnalyticSolution> analytic_three_point(double energy, double xi,
                                                            int trunc = 50,
                                                            const KktTolerances& tol = {}) {
  detail::require(energy >= 1.0 && energy <= 2.0, "three-point family needs E in [1, 2]");
  detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be >= 0");
  if (xi == 0.0) throw InvalidArgument("three-point family is undefined at xi = 0");
  detail::require(trunc >= 2, "three-point family needs truncation >= 2");

  const double x2 = xi * xi;
  const double p0 = (xi * (5.0 * xi + 3.0 * energy * (1.0 - xi) - 2.0) - 1.0) / (6.0 * x2);
  const double p1 = (1.0 + xi * (2.0 - 3.0 * energy + xi)) / (3.0 * x2);
  const double p2 = (1.0 + xi) * (xi * (3.0 * energy - 1.0) - 1.0) / (6.0 * x2);
  if (p0 < tolerance::negative_weight || p1 < tolerance::negative_weight ||
      p2 < tolerance::negative_weight) {
    return std::nullopt;
  }
  std::vector<double> p(static_cast<std::size_t>(trunc) + 1, 0.0);
  p[0] = std::max(p0, 0.0);
  p[1] = std::max(p1, 0.0);
  p[2] = std::max(p2, 0.0);
  SpectrumVector spectrum(std::move(p));

  const double a = 1.0 + xi;
  const double mu = xi * (1.0 + (1.0 - energy) * xi) / (a * a * a);
  const double gamma = -(5.0 + (5.0 - 3.0 * energy) * xi) / (3.0 * a * a);
  const double value =
      (5.0 + 5.0 * xi * (2.0 + xi) - 3.0 * energy * xi * (2.0 + (2.0 - energy) * xi)) /
      (6.0 * a * a * a);

  const QpProblem problem(build_kernel(trunc, xi), energy);
  KktCertificate cert = evaluate_certificate(problem, spectrum, mu, gamma, tol);
  return detail::accept_if_dual_feasible({std::move(spectrum), std::move(cert), value}, tol);
}

/// Weights 1-{E} on floor(E) and {E} on ceil(E); a single level at integer E.
/// The truncation is max(ceil(E), trunc).
inline SpectrumVector small_xi_state(double energy, int trunc = 0) {
  const EnergySplit s = split_energy(energy);
  std::vector<double> p(static_cast<std::size_t>(std::max(s.ceil, trunc)) + 1, 0.0);
  p[static_cast<std::size_t>(s.floor)] += 1.0 - s.frac;
  p[static_cast<std::size_t>(s.ceil)] += s.frac;
  return SpectrumVector(std::move(p));
}

/// Fidelity of small_xi_state(E) through the additive-noise channel.
inline double small_xi_fidelity(double energy, double xi) {
  const EnergySplit s = split_energy(energy);
  const double w = s.frac;
  return (1.0 - w) * (1.0 - w) * g_kernel(s.floor, s.floor, xi) +
         2.0 * w * (1.0 - w) * g_kernel(s.floor, s.ceil, xi) +
         w * w * g_kernel(s.ceil, s.ceil, xi);
}

/// small_xi_state with the multipliers solved from its two stationarity rows.
/// Empty when the resulting duals are infeasible (xi too large for this family).
inline std::optional<AnalyticSolution> analytic_small_xi(double energy, double xi, int trunc,
                                                         const KktTolerances& tol = {}) {
  const EnergySplit s = split_energy(energy);
  detail::require(trunc >= s.ceil, "truncation must reach ceil(E)");
  SpectrumVector spectrum = small_xi_state(energy, trunc);
  const QpProblem problem(build_kernel(trunc, xi), energy);
  KktCertificate cert;
  if (s.frac == 0.0) {
    cert = certify(problem, spectrum, tol);
  } else {
    const double pf = 1.0 - s.frac;
    const double pc = s.frac;
    const double gff = g_kernel(s.floor, s.floor, xi);
    const double gfc = g_kernel(s.floor, s.ceil, xi);
    const double gcc = g_kernel(s.ceil, s.ceil, xi);
    const double mu = 2.0 * (pf * (gff - gfc) + pc * (gfc - gcc));
    const double gamma = -2.0 * (pf * gff + pc * gfc) - static_cast<double>(s.floor) * mu;
    cert = evaluate_certificate(problem, spectrum, mu, gamma, tol);
  }
  const double value = small_xi_fidelity(energy, xi);
  return detail::accept_if_dual_feasible({std::move(spectrum), std::move(cert), value}, tol);
}

}  // namespace cvbench
