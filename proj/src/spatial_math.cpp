#include "wair/spatial_math.hpp"

#include <cmath>
#include <stdexcept>

namespace wair {

namespace {
constexpr int kMaxPolarIterations = 10;
}

RotationMatrix::RotationMatrix(const Mat3& m, double tol) : m_(m) {
  if (!is_rotation(m, tol)) {
    throw std::invalid_argument("RotationMatrix: matrix is not in SO(3)");
  }
}

RotationMatrix RotationMatrix::transpose() const {
  return RotationMatrix(Mat3(m_.transpose()), Unchecked{});
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& other) const {
  return RotationMatrix(Mat3(m_ * other.m_), Unchecked{});
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

RotationMatrix rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << 1.0, 0.0, 0.0,
       0.0, c, -s,
       0.0, s, c;
  return RotationMatrix(m, RotationMatrix::Unchecked{});
}

RotationMatrix rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return RotationMatrix(m, RotationMatrix::Unchecked{});
}

RotationMatrix rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return RotationMatrix(m, RotationMatrix::Unchecked{});
}

Mat3 rotation_derivative(const RotationMatrix& rotation, const Vec3& omega_body) {
  return rotation_derivative(rotation.matrix(), omega_body);
}

Mat3 rotation_derivative(const Mat3& rotation, const Vec3& omega_body) {
  return rotation * skew(omega_body);
}

RotationMatrix reorthonormalize(const Mat3& m) {
  if (!m.allFinite() || m.determinant() < 0.5) {
    throw std::invalid_argument("reorthonormalize: matrix is near-singular or reflected");
  }
  Mat3 r = m;
  for (int it = 0; it < kMaxPolarIterations; ++it) {
    const Mat3 next = 0.5 * (r + r.inverse().transpose());
    const double change = (next - r).cwiseAbs().maxCoeff();
    r = next;
    if (change < 1e-15) break;
  }
  return RotationMatrix(r, RotationMatrix::Unchecked{});
}

}  // namespace wair
