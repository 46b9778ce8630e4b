#include <cmath>

#include <gtest/gtest.h>

#include "cvbench/error.hpp"
#include "cvbench/kkt_certify.hpp"
#include "cvbench/trunc_bounds.hpp"
#include "test_support.hpp"

namespace cvbench {
namespace {

using truncation::choose_truncation;
using truncation::lower_bound;
using truncation::lower_bound_vacuous;
using truncation::projector_mass_bound;

TEST(LowerBound, Examples) {
  for (int m : {0, 3, 50}) EXPECT_EQ(lower_bound(1.0, 0.0, m), 1.0);
  const double expected = 1.0 - std::pow(2.0 * std::sqrt(0.6 / 51.0) + std::sqrt(0.369), 2.0);
  EXPECT_NEAR(lower_bound(0.6310, 0.6, 50), expected, 1e-15);
  EXPECT_NEAR(lower_bound(0.6310, 0.6, 50), 0.32039, 1e-4);
  EXPECT_NEAR(lower_bound(0.7, 2.0, 1'000'000'000), 0.7, 1e-3);
  EXPECT_LT(lower_bound(0.7, 2.0, 1'000'000), lower_bound(0.7, 2.0, 1'000'000'000));
}

TEST(LowerBound, ClampsAndFlagsVacuousBound) {
  EXPECT_EQ(lower_bound(0.5, 5.0, 1), 0.0);
  EXPECT_TRUE(lower_bound_vacuous(0.5, 5.0, 1));
  EXPECT_FALSE(lower_bound_vacuous(0.6310, 0.6, 50));
  EXPECT_EQ(lower_bound(0.0, 0.0, 10), 0.0);
}

TEST(LowerBound, RejectsOutOfRange) {
  EXPECT_THROW(lower_bound(1.1, 0.5, 10), InvalidArgument);
  EXPECT_THROW(lower_bound(-0.1, 0.5, 10), InvalidArgument);
  EXPECT_THROW(lower_bound(0.5, -0.5, 10), InvalidArgument);
  EXPECT_THROW(lower_bound(0.5, 0.5, -1), InvalidArgument);
  EXPECT_THROW(lower_bound(std::nan(""), 0.5, 10), InvalidArgument);
}

TEST(ProjectorMassBound, Examples) {
  EXPECT_EQ(projector_mass_bound(0.0, 7), 1.0);
  EXPECT_NEAR(projector_mass_bound(0.6, 50), 1.0 - 0.6 / 51.0, 1e-15);
  EXPECT_NEAR(projector_mass_bound(0.6, 50), 0.988235, 1e-6);
  EXPECT_EQ(projector_mass_bound(4.0, 3), 0.0);
  EXPECT_EQ(projector_mass_bound(9.0, 3), 0.0);
  EXPECT_THROW(projector_mass_bound(-1.0, 3), InvalidArgument);
}

TEST(ChooseTruncation, ZeroEnergyNeedsOnlyVacuum) {
  for (double xi : {0.0, 0.3, 2.0}) {
    const auto c = choose_truncation(0.0, xi, 1e-3);
    EXPECT_EQ(c.trunc, 0);
    EXPECT_EQ(c.status, truncation::TruncationStatus::Reached);
  }
}

TEST(ChooseTruncation, LooseTargetAtTwoPointInstance) {
  const auto c = choose_truncation(0.6, 0.25, 0.5);
  EXPECT_EQ(c.status, truncation::TruncationStatus::Reached);
  EXPECT_LE(c.trunc, 50);
  EXPECT_LE(c.gap, 0.5);
  const QpSolution s = solve(QpProblem::teleportation(0.6, 0.25, c.trunc));
  EXPECT_NEAR(s.value - lower_bound(s.value, 0.6, c.trunc), c.gap, 1e-12);
  // Smallest such M: one less fails.
  if (c.trunc > 0) {
    const QpSolution below = solve(QpProblem::teleportation(0.6, 0.25, c.trunc - 1));
    EXPECT_GT(below.value - lower_bound(below.value, 0.6, c.trunc - 1), 0.5);
  }
}

TEST(ChooseTruncation, UnitTargetAlwaysZero) {
  for (double e : {0.0, 0.6, 3.0, 10.0}) EXPECT_EQ(choose_truncation(e, 0.5, 1.0).trunc, 0);
}

TEST(ChooseTruncation, CapReachedCarriesBestGap) {
  const auto c = choose_truncation(2.0, 0.5, 1e-6, 16);
  EXPECT_EQ(c.status, truncation::TruncationStatus::CapReached);
  EXPECT_LE(c.trunc, 16);
  EXPECT_GT(c.gap, 1e-6);
}

TEST(ChooseTruncation, RejectsBadTarget) {
  EXPECT_THROW(choose_truncation(1.0, 0.5, 0.0), InvalidArgument);
  EXPECT_THROW(choose_truncation(1.0, 0.5, 1.5), InvalidArgument);
}

TEST(Sandwich, LadderTightensAndNests) {
  for (auto [e, xi] : {std::pair{0.6, 0.25}, std::pair{1.9, 0.5}, std::pair{3.0, 0.1}, std::pair{1.2, 2.0 / 3.0}}) {
    double prev_lb = -1.0;
    std::vector<std::pair<int, double>> solved;
    for (int m : {10, 20, 40, 80}) {
      const FidelityResult r = energy_constrained_fidelity(e, xi, m);
      ASSERT_EQ(r.status, SolveStatus::Certified);
      EXPECT_LE(r.lower_bound, r.value_truncated);
      EXPECT_EQ(r.upper_bound, r.value_truncated);
      EXPECT_GE(r.lower_bound, prev_lb) << "M=" << m << " E=" << e;
      prev_lb = r.lower_bound;
      solved.emplace_back(m, r.value_truncated);
    }
    for (std::size_t i = 0; i < solved.size(); ++i) {
      for (std::size_t j = i; j < solved.size(); ++j) {
        const auto [m, f] = solved[i];
        EXPECT_LE(lower_bound(f, e, m), solved[j].second);
        EXPECT_LE(solved[j].second, f + 1e-12);
      }
    }
  }
}

TEST(Sandwich, ResultInvariantsOnRandomInstances) {
  auto g = testing::rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const double e = testing::uniform(g, 0.0, 5.0);
    const double xi = testing::uniform(g, 0.0, 2.0);
    const int m = testing::uniform_int(g, 0, 40);
    const FidelityResult r = energy_constrained_fidelity(e, xi, m);
    EXPECT_LE(r.lower_bound, r.value_truncated);
    EXPECT_EQ(r.upper_bound, r.value_truncated);
    const double f = std::clamp(r.value_truncated, 0.0, 1.0);
    const double formula = 1.0 - std::pow(2.0 * std::sqrt(e / (m + 1.0)) + std::sqrt(1.0 - f), 2.0);
    EXPECT_NEAR(r.lower_bound, std::min(std::max(0.0, formula), r.value_truncated), 1e-15);
    EXPECT_EQ(r.lower_bound_vacuous, formula <= 0.0);
  }
}

TEST(Sandwich, SmallNoiseAnalyticValueInsideBracket) {
  for (double e : {0.3, 0.6, 1.9}) {
    const FidelityResult r = energy_constrained_fidelity(e, 1e-4, 50);
    const double analytic = small_xi_fidelity(e, 1e-4);
    EXPECT_GE(analytic, r.lower_bound);
    EXPECT_LE(analytic, r.value_truncated + 1e-12);
  }
}

}  // namespace
}  // namespace cvbench
