#pragma once

// Brute-force verifiers. They use g_kernel for matrix entries and nothing
// else from the solver path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "cvbench/error.hpp"
#include "cvbench/fock_kernel.hpp"
#include "cvbench/numeric.hpp"
#include "cvbench/qp_problem.hpp"
#include "cvbench/spectrum.hpp"

namespace cvbench::oracle {

inline constexpr int kMaxGridTrunc = 8;

struct GridSearchResult {
  double best_value = 0.0;
  SpectrumVector best_point;
  double resolution = 0.0;
  std::int64_t points_evaluated = 0;
};

namespace detail {

using Table = std::vector<std::vector<double>>;

inline Table kernel_table(int trunc, double xi) {
  Table g(static_cast<std::size_t>(trunc) + 1, std::vector<double>(static_cast<std::size_t>(trunc) + 1));
  for (int n = 0; n <= trunc; ++n) {
    for (int m = 0; m <= trunc; ++m) g[n][m] = g_kernel(n, m, xi);
  }
  return g;
}

inline double quadratic_form(const Table& g, std::span<const double> p) {
  CompensatedSum s;
  for (std::size_t n = 0; n < p.size(); ++n) {
    for (std::size_t m = 0; m < p.size(); ++m) s += p[n] * p[m] * g[n][m];
  }
  return s.value();
}

struct Partial {
  double scaled_value = std::numeric_limits<double>::infinity();  // f * N^2
  std::vector<int> counts;
  std::int64_t points = 0;
};

// Enumerates counts for levels trunc..2 (depth-first, descending level) and
// sweeps the (level 0, level 1) line in closed form at the leaves.
//
// Subtrees are skipped when a lower bound on every completion exceeds the best
// value found so far. The bound drops p >= 0 and solves the remaining problem
// min 2 w.x + x.Gx over sum x = R, sum n x <= B exactly. With A = G_{<=L}^{-1}
// and C the constraint columns, an active set C with targets r gives
//   t.(r + C.A w) - w.A w,  t = (C.A C)^{-1} (r + C.A w).
// It is used only where G_{<=L} is well conditioned, with a relative margin.
class Enumerator {
 public:
  Enumerator(const Table& g, int total, int budget)
      : g_(g), trunc_(static_cast<int>(g.size()) - 1), total_(total), budget_(budget),
        counts_(g.size(), 0), w_(g.size(), std::vector<double>(g.size(), 0.0)) {
    prepare_bounds();
    seed_cutoff();
  }

  Partial run_with_top(int top_count) {
    best_ = Partial{};
    cutoff_ = seed_;
    if (trunc_ < 2) {
      leaf(total_, budget_, 0.0, 0.0, 0.0);
      return best_;
    }
    const int top = trunc_;
    const double c = top_count;
    counts_[top] = top_count;
    const double q = c * c * g_[top][top];
    for (int i = 0; i < top; ++i) w_[top - 1][i] = c * g_[i][top];
    descend(top - 1, total_ - top_count, budget_ - top * top_count, q);
    counts_[top] = 0;
    return best_;
  }

  [[nodiscard]] int top_range() const {
    if (trunc_ < 2) return 0;
    return std::min(total_, budget_ / trunc_);
  }

  [[nodiscard]] std::int64_t pruned() const noexcept { return pruned_; }

 private:
  struct Bound {
    bool usable = false;
    Eigen::MatrixXd inverse;
    Eigen::VectorXd u;  // A 1
    Eigen::VectorXd v;  // A n
    double s = 0.0;     // 1.A 1
    double t = 0.0;     // 1.A n
    double e = 0.0;     // n.A n
    double det = 0.0;
  };

  void prepare_bounds() {
    bounds_.resize(g_.size());
    for (int level = 2; level < trunc_; ++level) {
      const Eigen::Index d = level + 1;
      Eigen::MatrixXd sub(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) sub(i, j) = g_[i][j];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
      if (es.info() != Eigen::Success) continue;
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (!(lo > 0.0) || hi / lo > kMaxCondition) continue;
      Bound& b = bounds_[static_cast<std::size_t>(level)];
      b.inverse = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
      const Eigen::VectorXd levels = Eigen::VectorXd::LinSpaced(d, 0.0, static_cast<double>(level));
      b.u = b.inverse * Eigen::VectorXd::Ones(d);
      b.v = b.inverse * levels;
      b.s = b.u.sum();
      b.t = b.v.sum();
      b.e = levels.dot(b.v);
      b.det = b.s * b.e - b.t * b.t;
      b.usable = b.s > 0.0 && b.det > 0.0;
    }
  }

  // Best lattice point supported on at most two levels; only a pruning cutoff.
  void seed_cutoff() {
    for (int a = 0; a <= trunc_; ++a) {
      for (int b = a; b <= trunc_; ++b) {
        for (int kb = 0; kb <= total_; ++kb) {
          const int ka = total_ - kb;
          if (a * ka + b * kb > budget_) break;
          const double x = ka, y = kb;
          const double v = x * x * g_[a][a] + 2.0 * x * y * g_[a][b] + y * y * g_[b][b];
          seed_ = std::min(seed_, v);
        }
      }
    }
  }

  [[nodiscard]] bool prunable(int level, int remaining, int budget, double q) const {
    const Bound& b = bounds_[static_cast<std::size_t>(level)];
    if (!b.usable || !std::isfinite(cutoff_)) return false;
    const Eigen::Map<const Eigen::VectorXd> w(w_[static_cast<std::size_t>(level)].data(), level + 1);
    const Eigen::VectorXd aw = b.inverse * w;
    const double quad = w.dot(aw);
    const double r1 = remaining + b.u.dot(w);
    double head = r1 * r1 / b.s;
    const double energy = (r1 / b.s) * b.t - levels_dot(aw, level);
    if (energy > budget) {
      const double r2 = budget + b.v.dot(w);
      head = (b.e * r1 * r1 - 2.0 * b.t * r1 * r2 + b.s * r2 * r2) / b.det;
    }
    const double bound = q + head - quad;
    const double margin = kBoundMargin * (std::abs(q) + std::abs(head) + std::abs(quad)) + 1e-9;
    return bound > cutoff_ + margin;
  }

  static double levels_dot(const Eigen::VectorXd& x, int level) {
    double acc = 0.0;
    for (int i = 1; i <= level; ++i) acc += i * x(i);
    return acc;
  }

  // w_[level][i] (i <= level) is sum over fixed levels j > level of G(i, j) c_j.
  void descend(int level, int remaining, int budget, double q) {
    const auto& w = w_[static_cast<std::size_t>(level)];
    if (level < 2) {
      leaf(remaining, budget, q, w[0], w[1]);
      return;
    }
    if (prunable(level, remaining, budget, q)) {
      ++pruned_;
      return;
    }
    const double cross = w[static_cast<std::size_t>(level)];
    auto& below = w_[static_cast<std::size_t>(level) - 1];
    const int cmax = std::min(remaining, budget / level);
    for (int c = 0; c <= cmax; ++c) {
      counts_[level] = c;
      const double cd = c;
      for (int i = 0; i < level; ++i) below[i] = w[i] + cd * g_[i][level];
      descend(level - 1, remaining - c, budget - level * c, q + 2.0 * cd * cross + cd * cd * g_[level][level]);
    }
    counts_[level] = 0;
  }

  // Along the leaf line (a, b) = (remaining - k1, k1) the value is a quadratic
  // in k1, so its integer minimum sits at an endpoint or next to the vertex.
  void leaf(int remaining, int budget, double q, double w0, double w1) {
    const int kmax = (trunc_ >= 1) ? std::min(remaining, budget) : 0;
    const double g00 = g_[0][0];
    const double g01 = trunc_ >= 1 ? g_[0][1] : 0.0;
    const double g11 = trunc_ >= 1 ? g_[1][1] : 0.0;
    auto value = [&](int k1) {
      const double a = remaining - k1;
      const double b = k1;
      return q + 2.0 * (a * w0 + b * w1) + a * a * g00 + 2.0 * a * b * g01 + b * b * g11;
    };
    best_.points += kmax + 1;

    int cand[4] = {0, kmax, 0, kmax};
    const double curv = g00 - 2.0 * g01 + g11;
    if (curv > 0.0) {
      const double r = remaining;
      const double lin = 2.0 * (w1 - w0) - 2.0 * r * (g00 - g01);
      const double vertex = std::clamp(-lin / (2.0 * curv), 0.0, static_cast<double>(kmax));
      cand[2] = static_cast<int>(std::floor(vertex));
      cand[3] = std::min(kmax, cand[2] + 1);
    }
    std::sort(std::begin(cand), std::end(cand));
    for (int k1 : cand) {
      const double v = value(k1);
      if (v < best_.scaled_value) {
        best_.scaled_value = v;
        best_.counts = counts_;
        best_.counts[0] = remaining - k1;
        if (trunc_ >= 1) best_.counts[1] = k1;
        cutoff_ = std::min(cutoff_, v);
      }
    }
  }

  static constexpr double kMaxCondition = 1e8;
  static constexpr double kBoundMargin = 1e-9;

  const Table& g_;
  int trunc_;
  int total_;
  int budget_;
  std::vector<int> counts_;
  std::vector<std::vector<double>> w_;
  std::vector<Bound> bounds_;
  Partial best_;
  double seed_ = std::numeric_limits<double>::infinity();
  double cutoff_ = std::numeric_limits<double>::infinity();
  std::int64_t pruned_ = 0;
};

}  // namespace detail

/// Exhaustive minimum of f over the lattice {p = k/N : sum k = N, sum n k_n <= E N}.
/// The result upper-bounds the true minimum.
inline GridSearchResult grid_search_qp(const QpProblem& problem, double resolution) {
  const int trunc = problem.trunc();
  if (trunc > kMaxGridTrunc) {
    throw ResourceLimit("grid search refuses truncation " + std::to_string(trunc) + " > " +
                        std::to_string(kMaxGridTrunc));
  }
  const bool allowed = std::abs(resolution - 0.01) < 1e-15 || std::abs(resolution - 0.005) < 1e-15 ||
                       std::abs(resolution - 0.001) < 1e-15;
  cvbench::detail::require(allowed, "grid resolution must be 0.01, 0.005 or 0.001");

  const int total = static_cast<int>(std::lround(1.0 / resolution));
  const double scaled_budget = problem.energy() * total;
  const int budget = static_cast<int>(std::min(std::floor(scaled_budget + 1e-9), 1e9));
  const detail::Table g = detail::kernel_table(trunc, problem.xi());

  // Split over the count on the highest level; merge in ascending order.
  const int tops = detail::Enumerator(g, total, budget).top_range();
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
  std::vector<std::future<std::vector<detail::Partial>>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      std::vector<detail::Partial> out;
      detail::Enumerator e(g, total, budget);
      for (int top = static_cast<int>(w); top <= tops; top += static_cast<int>(workers)) {
        out.push_back(e.run_with_top(top));
      }
      return out;
    }));
  }
  std::vector<detail::Partial> by_top(static_cast<std::size_t>(tops) + 1);
  for (unsigned w = 0; w < workers; ++w) {
    auto parts = jobs[w].get();
    for (std::size_t i = 0; i < parts.size(); ++i) by_top[w + i * workers] = std::move(parts[i]);
  }

  GridSearchResult r;
  r.resolution = resolution;
  const detail::Partial* best = nullptr;
  for (const auto& part : by_top) {
    r.points_evaluated += part.points;
    if (!part.counts.empty() && (best == nullptr || part.scaled_value < best->scaled_value)) best = &part;
  }
  std::vector<double> p(static_cast<std::size_t>(trunc) + 1);
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = best->counts[n] / static_cast<double>(total);
  r.best_value = detail::quadratic_form(g, p);
  r.best_point = SpectrumVector(std::move(p));
  return r;
}

/// Central differences of p^T G p per coordinate, without any constraint.
inline Eigen::VectorXd finite_diff_gradient(const SpectrumVector& p, const KernelMatrix& kernel,
                                            double step) {
  cvbench::detail::require(step >= 1e-8 && step <= 1e-4, "step must lie in [1e-8, 1e-4]");
  if (static_cast<Eigen::Index>(p.size()) != kernel.dim()) {
    throw DimensionMismatch("spectrum and kernel dimensions differ");
  }
  detail::Table g(p.size(), std::vector<double>(p.size()));
  for (std::size_t n = 0; n < p.size(); ++n) {
    for (std::size_t m = 0; m < p.size(); ++m) g[n][m] = kernel(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  }
  std::vector<double> x(p.values());
  Eigen::VectorXd grad(static_cast<Eigen::Index>(p.size()));
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double orig = x[n];
    x[n] = orig + step;
    const double up = detail::quadratic_form(g, x);
    x[n] = orig - step;
    const double down = detail::quadratic_form(g, x);
    x[n] = orig;
    grad(static_cast<Eigen::Index>(n)) = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace cvbench::oracle
