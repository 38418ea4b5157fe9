#pragma once

#include <limits>

#include "wair/spatial_math.hpp"

namespace wair {

/// Spring-damper normal force with Stribeck tangential friction.
struct ContactParams {
  double k1 = 1e4;    // spring, N/m
  double k2 = 1e3;    // damper, N/(m/s)
  double mu_c = 0.6;  // Coulomb
  double mu_s = 0.7;  // static
  double mu_v = 0.1;  // viscous, N/(m/s)
  double v_s = 0.05;  // Stribeck velocity, m/s

  void validate() const;
};

inline constexpr double kMaxSlope = 1.0471975511965976;  // 60 deg

/// Inclined plane through the world origin, rising along +x. The terrain
/// frame has x up the slope, y lateral and z along the surface normal.
class Terrain {
 public:
  Terrain() = default;
  /// Throws std::invalid_argument unless 0 <= slope <= 60 deg.
  explicit Terrain(double slope);

  double slope() const { return slope_; }
  /// Columns are the terrain axes expressed in the world frame.
  const RotationMatrix& surface_to_world() const { return surface_to_world_; }

  Vec3 to_terrain(const Vec3& world) const { return surface_to_world_.matrix().transpose() * world; }
  Vec3 to_world(const Vec3& terrain) const { return surface_to_world_ * terrain; }
  Vec3 up_slope() const { return surface_to_world_.matrix().col(0); }
  Vec3 normal() const { return surface_to_world_.matrix().col(2); }
  /// Signed height of a world point above the surface.
  double height(const Vec3& world) const { return normal().dot(world); }

 private:
  double slope_ = 0.0;
  RotationMatrix surface_to_world_;
};

Vec3 world_to_terrain(const Vec3& p_world, const Terrain& terrain);
Vec3 terrain_to_world(const Vec3& p_terrain, const Terrain& terrain);

/// s(v) = mu_c - (mu_c - mu_s) exp(-v^2 / v_s^2).
double stribeck_coefficient(double v_tangential, const ContactParams& params);

enum class NormalClamp { kNone, kNonNegative };

/// Ground reaction force on a foot at terrain-frame position `p` moving with
/// terrain-frame velocity `v`. Zero above the surface. With kNonNegative the
/// normal component is clamped at zero before the friction terms use it.
Vec3 ground_force(const Vec3& p, const Vec3& v, const ContactParams& params,
                  NormalClamp clamp = NormalClamp::kNonNegative);

/// Returned by friction_cone_margin for a force with tangential load and no
/// positive normal component.
inline constexpr double kConeViolation = std::numeric_limits<double>::lowest();

/// mu * F_z - |F_xy| for a force in surface coordinates. Positive inside the cone.
double friction_cone_margin(const Vec3& force, double mu);

}  // namespace wair
