#pragma once

#include <Eigen/Dense>

namespace wair {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance used for the orthonormality and determinant checks on SO(3).
inline constexpr double kRotationTolerance = 1e-9;

/// Proper rotation matrix. Construction validates R^T R = I and det(R) = +1.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  /// Throws std::invalid_argument if `m` is not in SO(3) within `tol`.
  explicit RotationMatrix(const Mat3& m, double tol = kRotationTolerance);

  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const { return m_; }
  RotationMatrix transpose() const;

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  RotationMatrix operator*(const RotationMatrix& other) const;

 private:
  struct Unchecked {};
  RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;

  friend RotationMatrix reorthonormalize(const Mat3& m);
  friend RotationMatrix rot_x(double angle);
  friend RotationMatrix rot_y(double angle);
  friend RotationMatrix rot_z(double angle);
};

bool is_rotation(const Mat3& m, double tol = kRotationTolerance);

/// skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

RotationMatrix rot_x(double angle);
RotationMatrix rot_y(double angle);
RotationMatrix rot_z(double angle);

/// Rdot = R [omega]x with omega expressed in the body frame.
Mat3 rotation_derivative(const RotationMatrix& rotation, const Vec3& omega_body);
Mat3 rotation_derivative(const Mat3& rotation, const Vec3& omega_body);

/// Nearest rotation by polar iteration R <- (R + R^-T) / 2.
/// Throws std::invalid_argument when det(m) < 0.5 (near-singular or reflected).
RotationMatrix reorthonormalize(const Mat3& m);

}  // namespace wair
