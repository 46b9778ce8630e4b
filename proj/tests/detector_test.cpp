#include <cmath>

#include <gtest/gtest.h>

#include "cvbench/detector.hpp"
#include "cvbench/error.hpp"
#include "test_support.hpp"

namespace cvbench::detector {
namespace {

using cvbench::testing::uniform;

TEST(DiamondDistance, Examples) {
  for (int e = 0; e <= 6; ++e) {
    for (double eta : {0.0, 0.3, 0.9, 1.0}) {
      EXPECT_NEAR(diamond_distance(eta, e), 1.0 - std::pow(eta, e), 1e-15);
    }
  }
  for (double eta : {0.0, 0.5, 1.0}) EXPECT_EQ(diamond_distance(eta, 0.0), 0.0);
  EXPECT_NEAR(diamond_distance(0.9, 1.5), 0.145, 1e-12);
  EXPECT_EQ(diamond_distance(1.0, 5.0), 0.0);
}

TEST(DiamondDistance, RejectsOutOfRange) {
  EXPECT_THROW(diamond_distance(1.1, 1.0), InvalidArgument);
  EXPECT_THROW(diamond_distance(-0.1, 1.0), InvalidArgument);
  EXPECT_THROW(diamond_distance(0.5, -1.0), InvalidArgument);
}

TEST(DiamondDistance, DecibelConversion) {
  EXPECT_EQ(eta_from_db(0.0), 1.0);
  EXPECT_NEAR(eta_from_db(10.0), 0.1, 1e-15);
  EXPECT_NEAR(eta_from_db(3.0), 0.5011872336272722, 1e-15);
  EXPECT_THROW(eta_from_db(-1.0), InvalidArgument);
}

TEST(OptimalDetectorState, Examples) {
  const SpectrumVector a = optimal_detector_state(1.5);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], 0.0);
  EXPECT_EQ(a[1], 0.5);
  EXPECT_EQ(a[2], 0.5);
  const SpectrumVector b = optimal_detector_state(2.0);
  EXPECT_EQ(b.support(), (std::vector<int>{2}));
  EXPECT_EQ(b[2], 1.0);
  const SpectrumVector c = optimal_detector_state(0.3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[0], 0.7, 1e-15);
  EXPECT_NEAR(c[1], 0.3, 1e-15);
}

TEST(LpOracle, Examples) {
  EXPECT_NEAR(lp_oracle_diamond(0.9, 1.5, 10), 0.145, 1e-12);
  EXPECT_NEAR(lp_oracle_diamond(0.9, 1.5, 10), diamond_distance(0.9, 1.5), 1e-15);
  for (double eta : {0.0, 0.4, 1.0}) EXPECT_EQ(lp_oracle_diamond(eta, 0.0, 6), 0.0);
  EXPECT_NEAR(lp_oracle_diamond(0.5, 2.0, 10), 0.75, 1e-15);
  EXPECT_THROW(lp_oracle_diamond(0.5, 2.5, 2), InvalidArgument);
}

TEST(LpOracle, AgreesWithClosedForm) {
  auto g = cvbench::testing::rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const double eta = uniform(g, 0.0, 1.0);
    const double e = uniform(g, 0.0, 6.0);
    const int m = static_cast<int>(std::ceil(e)) + 8;
    EXPECT_NEAR(diamond_distance(eta, e), lp_oracle_diamond(eta, e, m), 1e-10) << eta << " " << e;
  }
}

TEST(DiamondDistance, Monotone) {
  for (double e : {0.0, 0.5, 1.0, 1.5, 2.0, 5.0, 5.7}) {
    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
      const double v = diamond_distance(i / 100.0, e);
      EXPECT_LE(v, prev) << e;
      prev = v;
    }
  }
  for (double eta : {0.0, 0.2, 0.9, 0.999, 1.0}) {
    double prev = -1.0;
    for (int i = 0; i <= 600; ++i) {
      const double v = diamond_distance(eta, i / 100.0);
      EXPECT_GE(v, prev) << eta;
      prev = v;
    }
  }
}

TEST(DiamondDistance, OptimalStateAchievesValue) {
  auto g = cvbench::testing::rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const double eta = uniform(g, 0.0, 1.0);
    const double e = uniform(g, 0.0, 6.0);
    EXPECT_NEAR(detection_error(optimal_detector_state(e), eta), diamond_distance(eta, e), 1e-14);
  }
}

TEST(DiamondDistance, ContinuousAcrossIntegerEnergies) {
  for (int k = 1; k <= 6; ++k) {
    for (double eta : {0.1, 0.5, 0.95}) {
      const double at = diamond_distance(eta, k);
      EXPECT_NEAR(diamond_distance(eta, std::nextafter(static_cast<double>(k), 0.0)), at, 1e-12);
      EXPECT_NEAR(diamond_distance(eta, std::nextafter(static_cast<double>(k), 10.0)), at, 1e-12);
    }
  }
}

TEST(SineDistance, Examples) {
  for (double eta : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_EQ(sine_distance(DetectorPair(eta, eta, 2.0)), 0.0);
  }
  for (double e : {1.0, 1.5, 4.0}) EXPECT_NEAR(sine_distance(DetectorPair(1.0, 0.0, e)), 1.0, 1e-15);
  const double mu = std::sqrt(0.72) + std::sqrt(0.02);
  const double avg = 0.5 * mu + 0.5 * mu * mu;
  EXPECT_NEAR(sine_distance(DetectorPair(0.9, 0.8, 1.5)), std::sqrt(1.0 - avg * avg), 1e-15);
}

TEST(SineDistance, OverlapRange) {
  auto g = cvbench::testing::rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = uniform(g, 0.0, 1.0);
    const double b = uniform(g, 0.0, 1.0);
    const double mu = DetectorPair(a, b, 1.0).overlap();
    EXPECT_GE(mu, 0.0);
    EXPECT_LT(mu, 1.0);
  }
  EXPECT_EQ(DetectorPair(0.3, 0.3, 1.0).overlap(), 1.0);
}

TEST(SineDistance, Symmetric) {
  auto g = cvbench::testing::rng(54);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = uniform(g, 0.0, 1.0);
    const double b = uniform(g, 0.0, 1.0);
    const double e = uniform(g, 0.0, 6.0);
    EXPECT_EQ(sine_distance(DetectorPair(a, b, e)), sine_distance(DetectorPair(b, a, e)));
  }
}

TEST(SineDistance, IdealDetectorUsesSquareRootOverlap) {
  auto g = cvbench::testing::rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const double eta = uniform(g, 0.0, 0.999);
    const double e = uniform(g, 0.0, 6.0);
    const EnergySplit s = split_energy(e);
    const double r = std::sqrt(eta);
    const double avg = (1.0 - s.frac) * std::pow(r, s.floor) + s.frac * std::pow(r, s.ceil);
    EXPECT_NEAR(sine_distance(DetectorPair(1.0, eta, e)), std::sqrt(1.0 - avg * avg), 1e-12);
  }
}

TEST(SineDistance, RejectsBadPair) {
  EXPECT_THROW(DetectorPair(1.2, 0.5, 1.0), InvalidArgument);
  EXPECT_THROW(DetectorPair(0.5, -0.5, 1.0), InvalidArgument);
  EXPECT_THROW(DetectorPair(0.5, 0.5, -1.0), InvalidArgument);
}

}  // namespace
}  // namespace cvbench::detector
