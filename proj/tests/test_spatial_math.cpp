#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "wair/spatial_math.hpp"

namespace wair {
namespace {

TEST(SpatialMath, RotationMatrixRejectsNonRotations) {
  Mat3 scaled = 2.0 * Mat3::Identity();
  EXPECT_THROW(RotationMatrix{scaled}, std::invalid_argument);
  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_THROW(RotationMatrix{reflection}, std::invalid_argument);
  EXPECT_NO_THROW(RotationMatrix{Mat3::Identity()});
}

TEST(SpatialMath, SkewMatchesCrossProduct) {
  test::Rng rng(1);
  for (int n = 0; n < 50; ++n) {
    const Vec3 a = rng.vec3(), b = rng.vec3();
    EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
    EXPECT_EQ((skew(a) + skew(a).transpose()).norm(), 0.0);
  }
}

TEST(SpatialMath, ElementaryRotationsAreRightHanded) {
  const double q = std::numbers::pi / 2;
  EXPECT_LT((rot_z(q) * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_LT((rot_x(q) * Vec3::UnitY() - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((rot_y(q) * Vec3::UnitZ() - Vec3::UnitX()).norm(), 1e-15);
  test::Rng rng(2);
  for (int n = 0; n < 20; ++n) {
    const double a = rng.uniform(-4.0, 4.0);
    for (const RotationMatrix& r : {rot_x(a), rot_y(a), rot_z(a)}) EXPECT_TRUE(is_rotation(r.matrix()));
  }
}

TEST(SpatialMath, RotationDerivativeMatchesExponentialMap) {
  test::Rng rng(3);
  for (int n = 0; n < 20; ++n) {
    const RotationMatrix r = rng.rotation();
    const Vec3 w = rng.vec3(2.0);
    const double h = 1e-6;
    const Mat3 fd = (r.matrix() * test::axis_angle(h * w) - r.matrix() * test::axis_angle(-h * w)) / (2 * h);
    EXPECT_LT((rotation_derivative(r, w) - fd).norm(), 1e-8);
    const Mat3 s = r.matrix().transpose() * rotation_derivative(r, w);
    EXPECT_LT((s + s.transpose()).norm(), 1e-14);
  }
}

TEST(SpatialMath, ReorthonormalizeRestoresSO3) {
  test::Rng rng(4);
  for (int n = 0; n < 50; ++n) {
    const Mat3 r = rng.rotation().matrix();
    Mat3 noisy = r;
    for (int i = 0; i < 9; ++i) noisy.data()[i] += 1e-4 * rng.uniform();
    const RotationMatrix fixed = reorthonormalize(noisy);
    EXPECT_LT((fixed.matrix().transpose() * fixed.matrix() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(fixed.matrix().determinant(), 1.0, 1e-12);
    EXPECT_LT((fixed.matrix() - r).norm(), 1e-3);
  }
}

TEST(SpatialMath, ReorthonormalizeIsIdempotentOnRotations) {
  const Mat3 r = rot_z(0.3).matrix() * rot_x(-1.1).matrix();
  EXPECT_LT((reorthonormalize(r).matrix() - r).norm(), 1e-15);
}

TEST(SpatialMath, ReorthonormalizeRejectsDegenerateInput) {
  EXPECT_THROW(reorthonormalize(Mat3::Zero()), std::invalid_argument);
  Mat3 reflection = Mat3::Identity();
  reflection(0, 0) = -1.0;
  EXPECT_THROW(reorthonormalize(reflection), std::invalid_argument);
  Mat3 nan = Mat3::Identity();
  nan(1, 1) = std::nan("");
  EXPECT_THROW(reorthonormalize(nan), std::invalid_argument);
}

TEST(SpatialMath, CompositionStaysInSO3) {
  test::Rng rng(5);
  RotationMatrix r;
  for (int n = 0; n < 100; ++n) r = r * rng.rotation();
  EXPECT_TRUE(is_rotation(r.matrix(), 1e-12));
  EXPECT_TRUE((r * r.transpose()).matrix().isIdentity(1e-12));
}

}  // namespace
}  // namespace wair
