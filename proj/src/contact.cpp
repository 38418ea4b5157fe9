#include "wair/contact.hpp"

#include <cmath>
#include <stdexcept>

namespace wair {

void ContactParams::validate() const {
  const bool finite = std::isfinite(k1) && std::isfinite(k2) && std::isfinite(mu_c) &&
                      std::isfinite(mu_s) && std::isfinite(mu_v) && std::isfinite(v_s);
  if (!finite) throw std::invalid_argument("ContactParams: values must be finite");
  if (!(k1 > 0.0)) throw std::invalid_argument("ContactParams: k1 must be positive");
  if (k2 < 0.0) throw std::invalid_argument("ContactParams: k2 must be non-negative");
  if (!(v_s > 0.0)) throw std::invalid_argument("ContactParams: v_s must be positive");
  if (!(mu_c > 0.0)) throw std::invalid_argument("ContactParams: mu_c must be positive");
  if (mu_s < 0.0 || mu_v < 0.0) {
    throw std::invalid_argument("ContactParams: mu_s and mu_v must be non-negative");
  }
}

Terrain::Terrain(double slope) : slope_(slope) {
  if (!(slope >= 0.0 && slope <= kMaxSlope)) {
    throw std::invalid_argument("Terrain: slope must lie in [0, 60] deg");
  }
  surface_to_world_ = rot_y(-slope);
}

Vec3 world_to_terrain(const Vec3& p_world, const Terrain& terrain) {
  return terrain.to_terrain(p_world);
}

Vec3 terrain_to_world(const Vec3& p_terrain, const Terrain& terrain) {
  return terrain.to_world(p_terrain);
}

double stribeck_coefficient(double v_tangential, const ContactParams& params) {
  const double ratio = v_tangential / params.v_s;
  return params.mu_c - (params.mu_c - params.mu_s) * std::exp(-ratio * ratio);
}

namespace {
double sgn(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace

Vec3 ground_force(const Vec3& p, const Vec3& v, const ContactParams& params,
                  NormalClamp clamp) {
  if (p.z() > 0.0) return Vec3::Zero();
  double normal = -params.k1 * p.z() - params.k2 * v.z();
  if (clamp == NormalClamp::kNonNegative) normal = std::max(normal, 0.0);
  Vec3 f;
  for (int j = 0; j < 2; ++j) {
    const double s = stribeck_coefficient(v[j], params);
    f[j] = -s * normal * sgn(v[j]) - params.mu_v * v[j];
  }
  f.z() = normal;
  return f;
}

double friction_cone_margin(const Vec3& force, double mu) {
  const double tangential = std::hypot(force.x(), force.y());
  if (force.z() <= 0.0 && tangential > 0.0) return kConeViolation;
  return mu * force.z() - tangential;
}

}  // namespace wair
