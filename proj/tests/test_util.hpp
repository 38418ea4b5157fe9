#pragma once

#include <random>

#include <Eigen/Dense>

#include "wair/hrom.hpp"
#include "wair/spatial_math.hpp"

namespace wair::test {

inline Mat3 axis_angle(const Vec3& w) {
  const double a = w.norm();
  if (a == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

class Rng {
 public:
  explicit Rng(unsigned seed) : gen_(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  Vec3 vec3(double scale = 1.0) { return scale * Vec3(uniform(), uniform(), uniform()); }
  Eigen::VectorXd vector(int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * uniform();
    return v;
  }
  RotationMatrix rotation() { return RotationMatrix(axis_angle(vec3(3.0))); }

  HromState state(const BodyParams& body) {
    HromState x;
    for (int i = 0; i < kNumLegs; ++i) {
      x.legs.set_leg(i, uniform(-0.6, 0.6), uniform(-0.6, 0.6),
                     uniform(body.leg_length_min + 0.01, body.leg_length_max));
    }
    for (int k = 0; k < kLegDofs; ++k) x.legs.q_dot[k] = uniform(-2.0, 2.0);
    x.body.position = vec3();
    x.body.rotation = rotation();
    x.body.velocity = vec3();
    x.body.angular_velocity = vec3(2.0);
    return x;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace wair::test
