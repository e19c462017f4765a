#include <gpl/core.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace gpl {
namespace {

TEST(CanonicalizeEllipse, AxisSwapRotatesByHalfPi) {
  const auto p = canonicalize_ellipse(10, 10, 3, 5, 0);
  EXPECT_EQ(p.cx, 10);
  EXPECT_EQ(p.cy, 10);
  EXPECT_EQ(p.w, 5);
  EXPECT_EQ(p.h, 3);
  EXPECT_DOUBLE_EQ(p.theta, kHalfPi);
}

TEST(CanonicalizeEllipse, CircleGetsZeroAngle) {
  const auto p = canonicalize_ellipse(0, 0, 4, 4, 1.2);
  EXPECT_EQ(p, (EllipseParams{0, 0, 4, 4, 0}));
}

TEST(CanonicalizeEllipse, AngleReducedByPi) {
  const auto p = canonicalize_ellipse(5, 5, 6, 2, 2.0);
  EXPECT_EQ(p.w, 6);
  EXPECT_EQ(p.h, 2);
  EXPECT_NEAR(p.theta, 2.0 - kPi, 1e-15);
  EXPECT_NEAR(p.theta, -1.1416, 1e-4);
}

TEST(CanonicalizeEllipse, RejectsNonPositiveAxes) {
  for (auto [r1, r2] : {std::pair{0.0, 1.0}, {1.0, 0.0}, {-2.0, 3.0}}) {
    try {
      canonicalize_ellipse(0, 0, r1, r2, 0);
      FAIL() << "expected NonPositiveAxis";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveAxis);
    }
  }
}

TEST(CanonicalizeEllipse, Idempotent) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> axis(1.0, 60.0), angle(-20.0, 20.0), center(-100.0, 300.0);
  for (int trial = 0; trial < 500; ++trial) {
    const EllipseParams raw{center(rng), center(rng), axis(rng), axis(rng), angle(rng)};
    const auto once = canonicalize_ellipse(raw);
    const auto twice = canonicalize_ellipse(once);
    EXPECT_EQ(once, twice);
    EXPECT_GE(once.w, once.h);
    EXPECT_GE(once.theta, -kHalfPi);
    EXPECT_LE(once.theta, kHalfPi);
  }
}

TEST(CanonicalizeEllipse, PreservesBoundaryPointSet) {
  // An axis swap shifts the parametrization by a quarter turn and angle
  // reduction by a half turn, so 64 samples coincide as sets.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> axis(1.0, 60.0), angle(-20.0, 20.0);
  for (int trial = 0; trial < 500; ++trial) {
    const EllipseParams raw{12.5, -3.0, axis(rng), axis(rng), angle(rng)};
    const auto canon = canonicalize_ellipse(raw);
    if (is_circle(canon.w, canon.h)) continue;
    EXPECT_LT(oracle::point_set_hausdorff(ellipse_points(raw, 64), ellipse_points(canon, 64)), 1e-9);
  }
}

TEST(ValidateVolume, AcceptsAllZeroBinary) {
  const Shape3 s{2, 4, 4};
  std::vector<double> v(s.count(), 0.0);
  EXPECT_NO_THROW(validate_volume(s, v, VolumeKind::Binary));
}

TEST(ValidateVolume, RejectsHeatmapAboveOne) {
  const Shape3 s{2, 4, 4};
  std::vector<double> v(s.count(), 0.5);
  v[7] = 1.0001;
  try {
    validate_volume(s, v, VolumeKind::Heatmap);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRangeValue);
  }
}

TEST(ValidateVolume, RejectsWrongElementCount) {
  const Shape3 s{2, 4, 4};
  std::vector<double> v(31, 0.0);
  try {
    validate_volume(s, v, VolumeKind::Binary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW((Volume<double>(s, std::vector<double>(31))), Error);
}

TEST(ValidateVolume, BinaryRejectsFractions) {
  const Shape3 s{1, 2, 2};
  std::vector<double> v{0, 1, 0.5, 1};
  EXPECT_THROW(validate_volume(s, v, VolumeKind::Binary), Error);
  EXPECT_NO_THROW(validate_volume(s, v, VolumeKind::Heatmap));
}

TEST(ConicCoefficients, GaugeIsUnitNormWithPositiveA) {
  const ConicCoefficients c(-2, 0, -2, 0, 0, 2);
  double n = 0;
  for (double v : c.values()) n += v * v;
  EXPECT_NEAR(n, 1.0, 1e-15);
  EXPECT_GT(c.a(), 0);
  EXPECT_NEAR(c.a(), 0.5773502691896258, 1e-15);
  EXPECT_THROW(ConicCoefficients(1, 0, -1, 0, 0, -1), Error);
}

}  // namespace
}  // namespace gpl
