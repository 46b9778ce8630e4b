#include <cmath>

#include <gtest/gtest.h>

#include "cvbench/error.hpp"
#include "cvbench/kkt_certify.hpp"
#include "cvbench/oracle.hpp"
#include "cvbench/qp_solver.hpp"
#include "test_support.hpp"

namespace cvbench {
namespace {

using testing::uniform;
using testing::uniform_int;

double residual(const SpectrumVector& p, double energy) {
  double r = std::abs(p.mass() - 1.0);
  r = std::max(r, p.energy() - energy);
  for (double x : p.probs()) r = std::max(r, -x);
  return r;
}

TEST(ProjectFeasible, FeasiblePointIsFixed) {
  Eigen::VectorXd v(4);
  v << 0.1, 0.2, 0.3, 0.4;
  const SpectrumVector p = project_feasible(v, 2.0);
  for (int n = 0; n < 4; ++n) EXPECT_NEAR(p[n], v(n), 1e-15);
}

TEST(ProjectFeasible, SimplexThreshold) {
  Eigen::VectorXd v(2);
  v << 1.2, -0.2;
  const SpectrumVector p = project_feasible(v, 1.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
}

TEST(ProjectFeasible, EnergyBindingMatchesGridProjection) {
  Eigen::VectorXd v(3);
  v << 0.0, 0.0, 1.0;
  const SpectrumVector p = project_feasible(v, 1.0);
  EXPECT_NEAR(p.energy(), 1.0, 1e-12);

  // Brute force over the feasible set at resolution 1e-4.
  const int n = 10000;
  double best = 1e300;
  double b0 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double x0 = i / double(n), x1 = j / double(n), x2 = 1.0 - x0 - x1;
      if (x1 + 2.0 * x2 > 1.0 + 1e-12) continue;
      const double d = x0 * x0 + x1 * x1 + (x2 - 1.0) * (x2 - 1.0);
      if (d < best) {
        best = d;
        b0 = x0;
        b1 = x1;
        b2 = x2;
      }
    }
  }
  EXPECT_NEAR(p[0], b0, 1e-4);
  EXPECT_NEAR(p[1], b1, 1e-4);
  EXPECT_NEAR(p[2], b2, 1e-4);
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
  EXPECT_NEAR(p[2], 0.5, 1e-12);
}

TEST(ProjectFeasible, RejectsNonFinite) {
  Eigen::VectorXd v(2);
  v << 0.5, std::nan("");
  EXPECT_THROW(project_feasible(v, 1.0), InvalidArgument);
  v << 0.5, 0.5;
  EXPECT_THROW(project_feasible(v, -1.0), InvalidArgument);
  EXPECT_THROW(project_feasible(Eigen::VectorXd(0), 1.0), InvalidArgument);
}

TEST(ProjectFeasible, ZeroEnergyGivesVacuum) {
  Eigen::VectorXd v(3);
  v << 0.0, 3.0, -1.0;
  const SpectrumVector p = project_feasible(v, 0.0);
  EXPECT_EQ(p[0], 1.0);
}

TEST(ProjectFeasible, VariationalInequalityOnRandomInputs) {
  auto g = testing::rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = uniform_int(g, 0, 30);
    const double e = uniform(g, 0.0, 4.0);
    Eigen::VectorXd v(m + 1);
    for (Eigen::Index i = 0; i <= m; ++i) v(i) = uniform(g, -2.0, 2.0);
    const SpectrumVector p = project_feasible(v, e);
    ASSERT_LE(residual(p, e), 1e-12) << "trial " << trial;
    // <v - p, q - p> <= 0 for every feasible q.
    for (int k = 0; k < 10; ++k) {
      const SpectrumVector q = project_feasible(testing::random_spectrum(g, m).vec(), e);
      EXPECT_LE((v - p.vec()).dot(q.vec() - p.vec()), 1e-10);
    }
  }
}

TEST(Solve, TwoPointInstance) {
  const QpSolution s = solve(QpProblem::teleportation(0.6, 0.25, 50));
  ASSERT_TRUE(s.certified());
  EXPECT_NEAR(s.value, 0.6310, 5e-5);
  EXPECT_NEAR(s.value, 0.63104, 1e-12);
  EXPECT_NEAR(s.spectrum[0], 0.4, 1e-12);
  EXPECT_NEAR(s.spectrum[1], 0.6, 1e-12);
  for (std::size_t n = 2; n < s.spectrum.size(); ++n) EXPECT_EQ(s.spectrum[n], 0.0);
}

TEST(Solve, ThreePointInstance) {
  const QpSolution s = solve(QpProblem::teleportation(1.2, 2.0 / 3.0, 50));
  ASSERT_TRUE(s.certified());
  EXPECT_NEAR(s.spectrum[0], 31.0 / 120.0, 1e-10);
  EXPECT_NEAR(s.spectrum[1], 34.0 / 120.0, 1e-10);
  EXPECT_NEAR(s.spectrum[2], 55.0 / 120.0, 1e-10);
  EXPECT_EQ(s.spectrum.support(), (std::vector<int>{0, 1, 2}));
}

TEST(Solve, IdentityChannelReturnsFeasiblePointWithUnitValue) {
  for (double e : {0.0, 0.5, 3.0}) {
    const QpSolution s = solve(QpProblem::teleportation(e, 0.0, 20));
    EXPECT_TRUE(s.certified());
    EXPECT_NEAR(s.value, 1.0, 1e-14);
    EXPECT_LE(residual(s.spectrum, e), 1e-12);
    EXPECT_FALSE(s.notes.empty());
  }
}

TEST(Solve, SolutionInvariants) {
  auto g = testing::rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = uniform_int(g, 0, 40);
    const double e = uniform(g, 0.0, 6.0);
    const double xi = uniform(g, 0.0, 3.0);
    const QpProblem prob = QpProblem::teleportation(e, xi, m);
    const QpSolution s = solve(prob);
    EXPECT_TRUE(s.certified()) << e << " " << xi << " " << m;
    EXPECT_LE(residual(s.spectrum, e), 1e-9);
    EXPECT_NEAR(s.value, objective(s.spectrum, prob.kernel()), 1e-12);
    EXPECT_TRUE(certify(prob, s.spectrum).certified());
  }
}

TEST(Solve, SmallNoiseRegime) {
  for (double e : {0.3, 0.6, 1.9, 2.0, 4.5}) {
    const QpSolution s = solve(QpProblem::teleportation(e, 1e-4, 50));
    ASSERT_TRUE(s.certified()) << e;
    EXPECT_NEAR(s.value, small_xi_fidelity(e, 1e-4), 1e-6);
  }
}

TEST(Solve, GradientPhaseAloneCertifies) {
  SolveOptions o;
  o.active_set = false;
  const QpSolution s = solve(QpProblem::teleportation(0.6, 0.25, 50), o);
  ASSERT_TRUE(s.certified());
  EXPECT_GT(s.iterations, 0);
  EXPECT_NEAR(s.value, 0.63104, 1e-9);
}

TEST(Solve, MonotoneDescentTrace) {
  for (auto [e, xi, m] : {std::tuple{0.6, 0.25, 50}, std::tuple{1.9, 0.5, 50}, std::tuple{3.0, 1.0, 6},
                          std::tuple{1.2, 2.0 / 3.0, 20}}) {
    SolveOptions o;
    o.active_set = false;
    o.record_trace = true;
    o.max_iterations = 3000;
    const QpSolution s = solve(QpProblem::teleportation(e, xi, m), o);
    ASSERT_GE(s.trace.size(), 2u);
    for (std::size_t i = 1; i < s.trace.size(); ++i) {
      EXPECT_LE(s.trace[i], s.trace[i - 1]) << "step " << i << " at E=" << e;
    }
  }
}

TEST(Solve, IterationCapReportsBestFeasibleIterate) {
  SolveOptions o;
  o.active_set = false;
  o.max_iterations = 5;
  const QpProblem prob = QpProblem::teleportation(1.2, 2.0 / 3.0, 30);
  const QpSolution s = solve(prob, o);
  EXPECT_EQ(s.status, SolveStatus::MaxIterations);
  EXPECT_EQ(s.iterations, 5);
  EXPECT_LE(residual(s.spectrum, 1.2), 1e-12);
  EXPECT_NEAR(s.value, objective(s.spectrum, prob.kernel()), 1e-15);
  EXPECT_LT(s.value, 1.0 / (1.0 + 2.0 / 3.0));
}

TEST(Solve, StartPointHonoured) {
  SolveOptions o;
  o.start = SpectrumVector::fock(3, 10);
  const QpSolution s = solve(QpProblem::teleportation(0.6, 0.25, 10), o);
  EXPECT_TRUE(s.certified());
  EXPECT_NEAR(s.value, 0.63104, 1e-12);
  o.start = SpectrumVector::vacuum(4);
  EXPECT_THROW(solve(QpProblem::teleportation(0.6, 0.25, 10), o), DimensionMismatch);
}

TEST(Solve, EnergyMonotonicity) {
  for (double xi : {0.1, 0.5, 1.5}) {
    double prev = 2.0;
    for (double e = 0.0; e <= 4.0 + 1e-12; e += 0.25) {
      const QpSolution s = solve(QpProblem::teleportation(e, xi, 40));
      ASSERT_TRUE(s.certified());
      EXPECT_LE(s.value, prev + 1e-12) << "E=" << e << " xi=" << xi;
      prev = s.value;
    }
  }
}

TEST(Solve, NoiseMonotonicity) {
  for (double e : {0.3, 1.2, 2.5}) {
    double prev = 2.0;
    for (double xi = 0.0; xi <= 2.0 + 1e-12; xi += 0.1) {
      const QpSolution s = solve(QpProblem::teleportation(e, xi, 40));
      ASSERT_TRUE(s.certified());
      EXPECT_LE(s.value, prev + 1e-12) << "E=" << e << " xi=" << xi;
      prev = s.value;
    }
  }
}

TEST(Solve, AgreesWithExhaustiveGrid) {
  auto g = testing::rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(g, 1, 8);
    const double e = uniform(g, 0.0, 3.0);
    const double xi = uniform(g, 0.0, 2.0);
    const QpProblem prob = QpProblem::teleportation(e, xi, m);
    const QpSolution s = solve(prob);
    const auto grid = oracle::grid_search_qp(prob, 0.01);
    ASSERT_TRUE(s.certified());
    EXPECT_LE(s.value, grid.best_value + 1e-9) << e << " " << xi << " " << m;
    // The lattice only sees the energy rounded down to its resolution.
    const double lattice_e = std::floor(e * 100.0 + 1e-9) / 100.0;
    const QpSolution on_lattice = solve(QpProblem::teleportation(lattice_e, xi, m));
    ASSERT_TRUE(on_lattice.certified());
    EXPECT_LE(on_lattice.value, grid.best_value + 1e-9) << e << " " << xi << " " << m;
    EXPECT_GE(on_lattice.value, grid.best_value - 1e-3) << e << " " << xi << " " << m;
  }
}

TEST(Solve, AgreesWithGridOnLatticeEnergies) {
  auto g = testing::rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = uniform_int(g, 1, 6);
    const double e = uniform_int(g, 0, 300) / 100.0;
    const double xi = uniform(g, 0.0, 2.0);
    const QpProblem prob = QpProblem::teleportation(e, xi, m);
    const QpSolution s = solve(prob);
    const auto grid = oracle::grid_search_qp(prob, 0.01);
    ASSERT_TRUE(s.certified());
    EXPECT_LE(s.value, grid.best_value + 1e-9) << e << " " << xi << " " << m;
    EXPECT_GE(s.value, grid.best_value - 1e-3) << e << " " << xi << " " << m;
  }
}

TEST(SolveWithRestarts, SingleSeedMatchesSolve) {
  const QpProblem prob = QpProblem::teleportation(0.6, 0.25, 50);
  EXPECT_NEAR(solve_with_restarts(prob, 1).value, solve(prob).value, 1e-15);
}

TEST(SolveWithRestarts, AllSeedsAgree) {
  const QpProblem prob = QpProblem::teleportation(1.2, 2.0 / 3.0, 50);
  const double ref = solve(prob).value;
  for (int seeds = 1; seeds <= 5; ++seeds) {
    const QpSolution s = solve_with_restarts(prob, seeds);
    EXPECT_TRUE(s.certified());
    EXPECT_NEAR(s.value, ref, 1e-9);
  }
  // Each random start on its own reaches the same value.
  SolveOptions o;
  auto g = testing::rng(24);
  for (int k = 0; k < 5; ++k) {
    o.start = project_feasible(testing::random_spectrum(g, 50).vec(), 1.2);
    const QpSolution s = solve(prob, o);
    ASSERT_TRUE(s.certified());
    EXPECT_NEAR(s.value, ref, 1e-9);
  }
}

TEST(SolveWithRestarts, IdentityChannel) {
  EXPECT_NEAR(solve_with_restarts(QpProblem::teleportation(2.0, 0.0, 10), 3).value, 1.0, 1e-14);
  EXPECT_THROW(solve_with_restarts(QpProblem::teleportation(2.0, 0.0, 10), 0), InvalidArgument);
}

TEST(QpProblemTest, VacuousEnergyFlag) {
  EXPECT_TRUE(QpProblem::teleportation(5.0, 0.1, 5).energy_vacuous());
  EXPECT_FALSE(QpProblem::teleportation(4.9, 0.1, 5).energy_vacuous());
  EXPECT_THROW(QpProblem::teleportation(-0.1, 0.1, 5), InvalidArgument);
}

TEST(LargestEigenvalue, MatchesDenseSolver) {
  for (double xi : {0.0, 0.3, 2.0}) {
    const KernelMatrix k = build_kernel(25, xi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.matrix(), Eigen::EigenvaluesOnly);
    EXPECT_NEAR(largest_eigenvalue(k), es.eigenvalues().maxCoeff(), 1e-10);
  }
}

}  // namespace
}  // namespace cvbench
