#pragma once

// Certified solver for the energy-constrained fidelity QP.
//
// Phase 1 is accelerated projected gradient with step 1/L (L the Lipschitz
// constant of the gradient, i.e. the top eigenvalue of 2G) and a monotone
// safeguard. Periodically the iterate seeds a primal active-set refinement
// that solves the equality-constrained KKT system on the current support
// exactly; its output is accepted only if certify() passes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvbench/error.hpp"
#include "cvbench/fock_kernel.hpp"
#include "cvbench/kkt_certify.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/qp_problem.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench {

enum class SolveStatus { Certified, MaxIterations, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Certified: return "Certified";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "unknown";
}

struct SolveOptions {
  int max_iterations = 200000;
  int refine_every = 25;
  double support_threshold = 1e-8;
  double kkt_tolerance = 1e-9;
  std::optional<SpectrumVector> start;  // vacuum when unset
  bool record_trace = false;
  bool active_set = true;  // false: gradient phase only, iterates certified as they stand
};

struct QpSolution {
  SpectrumVector spectrum;
  double value = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  KktCertificate certificate;
  std::vector<double> trace;  // accepted objective values, when requested
  std::string notes;

  [[nodiscard]] bool certified() const noexcept { return status == SolveStatus::Certified; }
};

namespace detail {

inline double energy_of(const Eigen::VectorXd& p) {
  CompensatedSum s;
  for (Eigen::Index n = 1; n < p.size(); ++n) s += static_cast<double>(n) * p(n);
  return s.value();
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& w) {
  std::vector<double> u(w.data(), w.data() + w.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  CompensatedSum running;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    running += u[j];
    const double t = (running.value() - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (w.array() - theta).cwiseMax(0.0).matrix();
}

inline Eigen::VectorXd levels(Eigen::Index dim) {
  return Eigen::VectorXd::LinSpaced(dim, 0.0, static_cast<double>(dim - 1));
}

// Exact solve of the projection once the support pattern is known:
// p_i = v_i - tau i - theta on S with sum p = 1 and sum i p_i = E.
inline std::optional<Eigen::VectorXd> exact_energy_projection(const Eigen::VectorXd& v,
                                                              const Eigen::VectorXd& pattern,
                                                              double energy) {
  CompensatedSum sv, si, sii, siv;
  double count = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (pattern(i) <= 0.0) continue;
    const double n = static_cast<double>(i);
    sv += v(i);
    si += n;
    sii += n * n;
    siv += n * v(i);
    count += 1.0;
  }
  const double c1 = sii.value() - si.value() * si.value() / count;
  if (!(c1 > 0.0)) return std::nullopt;
  const double c0 = siv.value() - si.value() * (sv.value() - 1.0) / count;
  const double tau = (c0 - energy) / c1;
  if (!(tau >= 0.0)) return std::nullopt;
  const double theta = (sv.value() - tau * si.value() - 1.0) / count;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double w = v(i) - tau * static_cast<double>(i) - theta;
    if (pattern(i) > 0.0) {
      if (w < 0.0) return std::nullopt;
      q(i) = w;
    } else if (w > 1e-12) {
      return std::nullopt;
    }
  }
  CompensatedSum mass;
  for (Eigen::Index i = 0; i < q.size(); ++i) mass += q(i);
  if (std::abs(mass.value() - 1.0) > 1e-14 || std::abs(energy_of(q) - energy) > 1e-13) {
    return std::nullopt;
  }
  return q;
}

inline Eigen::VectorXd project_feasible_vec(const Eigen::VectorXd& v, double energy) {
  const Eigen::Index dim = v.size();
  Eigen::VectorXd p = project_simplex(v);
  if (energy_of(p) <= energy) return p;
  if (energy == 0.0) {
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(dim);
    e0(0) = 1.0;
    return e0;
  }
  const Eigen::VectorXd n = levels(dim);
  auto at = [&](double tau) { return project_simplex(v - tau * n); };

  double lo = 0.0;
  double hi = 1.0;
  Eigen::VectorXd p_hi = at(hi);
  while (energy_of(p_hi) > energy) {
    lo = hi;
    hi *= 2.0;
    p_hi = at(hi);
  }
  for (int iter = 0; iter < 200; ++iter) {
    if (energy - energy_of(p_hi) <= 1e-12 || hi - lo <= 1e-16 * hi) break;
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd p_mid = at(mid);
    if (energy_of(p_mid) > energy) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = std::move(p_mid);
    }
  }
  if (auto exact = exact_energy_projection(v, p_hi, energy)) return *exact;
  return p_hi;
}

inline SpectrumVector to_spectrum(const Eigen::VectorXd& p) {
  return SpectrumVector(std::vector<double>(p.data(), p.data() + p.size()));
}

}  // namespace detail

/// Euclidean projection of v onto {p >= 0, sum p = 1, sum n p_n <= E}.
inline SpectrumVector project_feasible(const Eigen::VectorXd& v, double energy) {
  detail::require(v.size() > 0, "cannot project an empty vector");
  detail::require(v.allFinite(), "projection input must be finite");
  detail::require(std::isfinite(energy) && energy >= 0.0, "energy must be finite and >= 0");
  return detail::to_spectrum(detail::project_feasible_vec(v, energy));
}

/// Top eigenvalue of the (entrywise positive) kernel by power iteration.
inline double largest_eigenvalue(const KernelMatrix& kernel) {
  const auto& g = kernel.matrix();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(g.rows()).normalized();
  double lambda = x.dot(g * x);
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd y = g * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    const double next = x.dot(g * x);
    const bool done = std::abs(next - lambda) <= 1e-14 * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

namespace detail {

struct EqualitySolution {
  Eigen::VectorXd p;  // full length, zero off support
  double mu = 0.0;
  double gamma = 0.0;
};

// Minimizes p^T G p over {p_i = 0 off S, sum p = 1, [sum n p_n = E]}.
inline std::optional<EqualitySolution> solve_on_support(const Eigen::MatrixXd& g,
                                                       const std::vector<int>& support,
                                                       bool energy_active, double energy) {
  const auto s = static_cast<Eigen::Index>(support.size());
  const Eigen::Index extra = energy_active ? 2 : 1;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + extra, s + extra);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + extra);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      kkt(i, j) = 2.0 * g(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
    }
    const Eigen::Index gamma_col = s + extra - 1;
    kkt(i, gamma_col) = 1.0;
    kkt(gamma_col, i) = 1.0;
    if (energy_active) {
      kkt(i, s) = static_cast<double>(support[static_cast<std::size_t>(i)]);
      kkt(s, i) = kkt(i, s);
    }
  }
  rhs(s + extra - 1) = 1.0;
  if (energy_active) rhs(s) = energy;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) return std::nullopt;

  EqualitySolution out;
  out.p = Eigen::VectorXd::Zero(g.rows());
  for (Eigen::Index i = 0; i < s; ++i) out.p(support[static_cast<std::size_t>(i)]) = x(i);
  out.mu = energy_active ? x(s) : 0.0;
  out.gamma = x(s + extra - 1);
  return out;
}

// Primal active-set method from a feasible point. Returns the terminal point
// when every multiplier has the right sign, nothing otherwise.
inline std::optional<Eigen::VectorXd> active_set_refine(const QpProblem& problem,
                                                        Eigen::VectorXd x,
                                                        double support_threshold) {
  const auto& g = problem.kernel().matrix();
  const double energy = problem.energy();
  const Eigen::Index dim = g.rows();
  constexpr double dual_tol = 1e-12;

  std::vector<int> support;
  for (Eigen::Index n = 0; n < dim; ++n) {
    if (x(n) > support_threshold) support.push_back(static_cast<int>(n));
  }
  if (support.empty()) return std::nullopt;
  bool energy_active = energy - energy_of(x) <= 1e-10;

  const int max_steps = 10 * static_cast<int>(dim) + 50;
  for (int step = 0; step < max_steps; ++step) {
    double mu = 0.0;
    double gamma = 0.0;
    Eigen::VectorXd target;
    if (energy_active && support.size() == 1) {
      // Single level pinned by the energy constraint; pick the smallest
      // nonnegative mu that keeps higher levels dual feasible.
      const int k = support.front();
      target = Eigen::VectorXd::Zero(dim);
      target(k) = 1.0;
      const Eigen::VectorXd grad = 2.0 * (g * target);
      for (Eigen::Index n = k + 1; n < dim; ++n) {
        mu = std::max(mu, (grad(k) - grad(n)) / static_cast<double>(n - k));
      }
      gamma = -grad(k) - static_cast<double>(k) * mu;
    } else {
      auto eq = solve_on_support(g, support, energy_active, energy);
      if (!eq) return std::nullopt;
      target = std::move(eq->p);
      mu = eq->mu;
      gamma = eq->gamma;
    }

    const Eigen::VectorXd d = target - x;
    double alpha = 1.0;
    int blocking = -1;  // level index, or dim for the energy constraint
    for (int n : support) {
      if (d(n) < 0.0) {
        const double a = x(n) / -d(n);
        if (a < alpha) {
          alpha = a;
          blocking = n;
        }
      }
    }
    if (!energy_active) {
      const double de = energy_of(d);
      if (de > 0.0) {
        const double a = std::max(0.0, energy - energy_of(x)) / de;
        if (a < alpha) {
          alpha = a;
          blocking = static_cast<int>(dim);
        }
      }
    }

    if (blocking >= 0) {
      x += alpha * d;
      if (blocking == static_cast<int>(dim)) {
        energy_active = true;
      } else {
        x(blocking) = 0.0;
        support.erase(std::find(support.begin(), support.end(), blocking));
      }
      for (Eigen::Index n = 0; n < dim; ++n) {
        if (std::find(support.begin(), support.end(), static_cast<int>(n)) == support.end()) {
          x(n) = 0.0;
        }
      }
      continue;
    }

    x = target;
    if (energy_active && mu < -dual_tol) {
      energy_active = false;
      continue;
    }
    const Eigen::VectorXd grad = 2.0 * (g * x);
    int entering = -1;
    double most_negative = -dual_tol;
    for (Eigen::Index n = 0; n < dim; ++n) {
      if (std::find(support.begin(), support.end(), static_cast<int>(n)) != support.end()) continue;
      const double beta = grad(n) + mu * static_cast<double>(n) + gamma;
      if (beta < most_negative) {
        most_negative = beta;
        entering = static_cast<int>(n);
      }
    }
    if (entering < 0) return x.cwiseMax(0.0);
    support.insert(std::upper_bound(support.begin(), support.end(), entering), entering);
  }
  return std::nullopt;
}

}  // namespace detail

/// Solves the truncated QP; status Certified iff the returned spectrum passes certify().
inline QpSolution solve(const QpProblem& problem, const SolveOptions& opts = {}) {
  const auto& g = problem.kernel().matrix();
  const Eigen::Index dim = g.rows();
  const double energy = problem.energy();
  KktTolerances tol;
  tol.stationarity = opts.kkt_tolerance;
  tol.support = opts.support_threshold;

  Eigen::VectorXd x;
  if (opts.start) {
    if (static_cast<Eigen::Index>(opts.start->size()) != dim) {
      throw DimensionMismatch("start point does not match the problem truncation");
    }
    x = detail::project_feasible_vec(opts.start->vec(), energy);
  } else {
    x = Eigen::VectorXd::Zero(dim);
    x(0) = 1.0;
  }

  QpSolution out;
  if (problem.xi() == 0.0) {
    out.notes = "identity channel: every feasible spectrum is optimal; returned the seeded point";
  }

  auto try_accept = [&](const Eigen::VectorXd& point) -> bool {
    const SpectrumVector candidate = project_feasible(point, energy);
    KktCertificate cert = certify(problem, candidate, tol);
    if (!cert.certified()) return false;
    out.value = objective(candidate, problem.kernel());
    out.spectrum = candidate;
    out.certificate = std::move(cert);
    out.status = SolveStatus::Certified;
    return true;
  };
  auto refine = [&](const Eigen::VectorXd& point) -> bool {
    if (try_accept(point)) return true;
    if (!opts.active_set) return false;
    if (auto refined = detail::active_set_refine(problem, point, opts.support_threshold)) {
      return try_accept(*refined);
    }
    return false;
  };

  const double lipschitz = 2.0 * largest_eigenvalue(problem.kernel()) * (1.0 + 1e-12);
  const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;
  auto f = [&](const Eigen::VectorXd& p) { return p.dot(g * p); };

  double fx = f(x);
  if (opts.record_trace) out.trace.push_back(fx);
  if (refine(x)) {
    if (opts.record_trace) out.trace.push_back(out.value);
    return out;
  }
  if (!opts.start && opts.active_set && problem.xi() > 0.0) {
    // Floor/ceil mixture: the optimal support as xi -> 0.
    const double e = std::min(energy, static_cast<double>(problem.trunc()));
    if (refine(small_xi_state(e, problem.trunc()).vec())) {
      if (opts.record_trace) out.trace.push_back(out.value);
      return out;
    }
  }

  Eigen::VectorXd x_prev = x;
  double t = 1.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    out.iterations = it;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Eigen::VectorXd y = x + ((t - 1.0) / t_next) * (x - x_prev);
    Eigen::VectorXd z = detail::project_feasible_vec(y - step * (2.0 * (g * y)), energy);
    double fz = f(z);
    t = t_next;
    if (fz > fx) {
      // Momentum overshoot: fall back to a plain projected-gradient step.
      t = 1.0;
      z = detail::project_feasible_vec(x - step * (2.0 * (g * x)), energy);
      fz = f(z);
      if (fz > fx) {
        z = x;
        fz = fx;
      }
    }
    const bool stalled = (z - x).lpNorm<Eigen::Infinity>() == 0.0;
    x_prev = x;
    x = std::move(z);
    fx = fz;
    if (opts.record_trace) out.trace.push_back(fx);
    if ((it % opts.refine_every == 0 || stalled) && refine(x)) return out;
  }

  out.status = SolveStatus::MaxIterations;
  out.spectrum = project_feasible(x, energy);
  out.value = objective(out.spectrum, problem.kernel());
  out.certificate = certify(problem, out.spectrum, tol);
  return out;
}

/// Seeds beyond the first two are random feasible points drawn from `rng_seed`.
inline QpSolution solve_with_restarts(const QpProblem& problem, int seeds,
                                      const SolveOptions& opts = {},
                                      std::uint64_t rng_seed = 0x5eedcafeULL) {
  detail::require(seeds >= 1, "need at least one seed");
  const int m = problem.trunc();
  std::vector<SpectrumVector> starts;
  starts.push_back(SpectrumVector::vacuum(m));
  if (seeds >= 2) {
    const double e = std::min(problem.energy(), static_cast<double>(m));
    starts.push_back(small_xi_state(e, m));
  }
  std::mt19937_64 rng(rng_seed);
  std::exponential_distribution<double> weight(1.0);
  for (int s = 2; s < seeds; ++s) {
    Eigen::VectorXd v(m + 1);
    for (Eigen::Index n = 0; n <= m; ++n) v(n) = weight(rng);
    v /= v.sum();
    starts.push_back(project_feasible(v, problem.energy()));
  }

  std::optional<QpSolution> best_certified;
  std::optional<QpSolution> best_any;
  std::exception_ptr last_error;
  for (const auto& start : starts) {
    SolveOptions o = opts;
    o.start = start;
    try {
      QpSolution sol = solve(problem, o);
      if (sol.certified() && (!best_certified || sol.value < best_certified->value)) {
        best_certified = sol;
      }
      if (!best_any || sol.value < best_any->value) best_any = std::move(sol);
    } catch (...) {
      last_error = std::current_exception();
    }
  }
  if (best_certified) return *best_certified;
  if (best_any) return *best_any;
  std::rethrow_exception(last_error);
}

}  // namespace cvbench
