#include "wair/hrom.hpp"

#include <cmath>
#include <stdexcept>

namespace wair {

namespace si = state_index;
namespace ii = input_index;

void BodyParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("BodyParams: mass must be positive");
  }
  if (!inertia.allFinite() || (inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("BodyParams: inertia must be symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("BodyParams: inertia must be positive definite");
  }
  if (!gravity.allFinite()) throw std::invalid_argument("BodyParams: gravity must be finite");
  for (const Vec3& h : hip_offsets) {
    if (!h.allFinite()) throw std::invalid_argument("BodyParams: hip offsets must be finite");
  }
  if (!(leg_length_min > 0.0) || !(leg_length_max > leg_length_min)) {
    throw std::invalid_argument("BodyParams: need 0 < leg_length_min < leg_length_max");
  }
}

void LegJointState::set_leg(int leg, double phi, double gamma, double length) {
  q[3 * leg] = phi;
  q[3 * leg + 1] = gamma;
  q[3 * leg + 2] = length;
}

StateVector HromState::flatten() const {
  StateVector x;
  x.segment<kLegDofs>(si::kLegPosition) = legs.q;
  x.segment<kLegDofs>(si::kLegVelocity) = legs.q_dot;
  x.segment<9>(si::kRotation) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(body.rotation.matrix().data());
  x.segment<3>(si::kPosition) = body.position;
  x.segment<3>(si::kAngularVelocity) = body.angular_velocity;
  x.segment<3>(si::kVelocity) = body.velocity;
  return x;
}

namespace {

HromState unpack(const StateVector& x, const RotationMatrix& rotation) {
  HromState s;
  s.legs.q = x.segment<kLegDofs>(si::kLegPosition);
  s.legs.q_dot = x.segment<kLegDofs>(si::kLegVelocity);
  s.body.rotation = rotation;
  s.body.position = x.segment<3>(si::kPosition);
  s.body.angular_velocity = x.segment<3>(si::kAngularVelocity);
  s.body.velocity = x.segment<3>(si::kVelocity);
  return s;
}

}  // namespace

Mat3 rotation_block(const StateVector& x) {
  return Eigen::Map<const Mat3>(x.data() + si::kRotation);
}

HromState HromState::unflatten(const StateVector& x) {
  return unpack(x, RotationMatrix(rotation_block(x)));
}

HromState HromState::unflatten_projected(const StateVector& x) {
  return unpack(x, reorthonormalize(rotation_block(x)));
}

InputFlat InputVector::flatten() const {
  InputFlat u;
  u.segment<kLegDofs>(ii::kJointAccel) = joint_accel;
  for (int i = 0; i < kNumLegs; ++i) u.segment<3>(ii::kGrf + 3 * i) = grf[i];
  u.segment<3>(ii::kThrust) = thrust;
  return u;
}

InputVector InputVector::unflatten(const InputFlat& u) {
  InputVector v;
  v.joint_accel = u.segment<kLegDofs>(ii::kJointAccel);
  for (int i = 0; i < kNumLegs; ++i) v.grf[i] = u.segment<3>(ii::kGrf + 3 * i);
  v.thrust = u.segment<3>(ii::kThrust);
  return v;
}

Vec3 leg_vector(double phi, double gamma, double length) {
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double sg = std::sin(gamma), cg = std::cos(gamma);
  return Vec3(-length * sp * cg, length * sg, -length * cp * cg);
}

double effective_length(double length, const BodyParams& params) {
  return std::max(length, params.leg_length_min);
}

namespace {

// Hip-to-foot vector in the body frame and its time derivative from joint rates.
struct LegGeometry {
  Vec3 offset;       // l_h + l_f
  Vec3 offset_rate;  // d(l_f)/dt
};

LegGeometry leg_geometry(double phi, double gamma, double length, double phi_dot,
                         double gamma_dot, double length_dot, int leg,
                         const BodyParams& params) {
  const double r = effective_length(length, params);
  const double r_dot = length < params.leg_length_min ? 0.0 : length_dot;
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double sg = std::sin(gamma), cg = std::cos(gamma);

  const Vec3 d_phi(-r * cp * cg, 0.0, r * sp * cg);
  const Vec3 d_gamma(r * sp * sg, r * cg, r * cp * sg);
  const Vec3 d_length(-sp * cg, sg, -cp * cg);

  LegGeometry g;
  g.offset = params.hip_offsets[leg] + r * d_length;
  g.offset_rate = d_phi * phi_dot + d_gamma * gamma_dot + d_length * r_dot;
  return g;
}

LegGeometry leg_geometry(const LegJointState& legs, int leg, const BodyParams& params) {
  return leg_geometry(legs.phi(leg), legs.gamma(leg), legs.length(leg), legs.phi_dot(leg),
                      legs.gamma_dot(leg), legs.length_dot(leg), leg, params);
}

LegGeometry leg_geometry(const StateVector& x, int leg, const BodyParams& params) {
  const int q = si::kLegPosition + 3 * leg;
  const int qd = si::kLegVelocity + 3 * leg;
  return leg_geometry(x[q], x[q + 1], x[q + 2], x[qd], x[qd + 1], x[qd + 2], leg, params);
}

void check_leg(int leg) {
  if (leg < 0 || leg >= kNumLegs) throw std::out_of_range("leg index must be in [0, 3]");
}

}  // namespace

Vec3 foot_position(const BodyState& body, const LegJointState& legs, int leg,
                   const BodyParams& params) {
  check_leg(leg);
  return body.position + body.rotation * leg_geometry(legs, leg, params).offset;
}

Vec3 foot_velocity(const BodyState& body, const LegJointState& legs, int leg,
                   const BodyParams& params) {
  check_leg(leg);
  const LegGeometry g = leg_geometry(legs, leg, params);
  return body.velocity +
         body.rotation * (body.angular_velocity.cross(g.offset) + g.offset_rate);
}

Matrix36 grf_jacobian(const BodyState& body, const LegJointState& legs, int leg,
                      const BodyParams& params) {
  check_leg(leg);
  const LegGeometry g = leg_geometry(legs, leg, params);
  Matrix36 jac;
  jac.leftCols<3>().setIdentity();
  jac.rightCols<3>() = -body.rotation.matrix() * skew(g.offset);
  return jac;
}

Vec3 foot_position(const StateVector& x, int leg, const BodyParams& params) {
  check_leg(leg);
  return x.segment<3>(si::kPosition) + rotation_block(x) * leg_geometry(x, leg, params).offset;
}

Vec3 foot_velocity(const StateVector& x, int leg, const BodyParams& params) {
  check_leg(leg);
  const LegGeometry g = leg_geometry(x, leg, params);
  const Vec3 omega = x.segment<3>(si::kAngularVelocity);
  return x.segment<3>(si::kVelocity) + rotation_block(x) * (omega.cross(g.offset) + g.offset_rate);
}

StateVector state_derivative(const StateVector& x, const InputVector& u,
                             const BodyParams& params) {
  const Mat3 rotation = rotation_block(x);
  const Vec3 omega = x.segment<3>(si::kAngularVelocity);

  Vec3 force = u.thrust;
  Vec3 torque = -omega.cross(params.inertia * omega);
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 offset = leg_geometry(x, i, params).offset;
    force += u.grf[i];
    torque += offset.cross(rotation.transpose() * u.grf[i]);
  }

  StateVector xdot;
  xdot.segment<kLegDofs>(si::kLegPosition) = x.segment<kLegDofs>(si::kLegVelocity);
  xdot.segment<kLegDofs>(si::kLegVelocity) = u.joint_accel;
  const Mat3 rotation_dot = rotation_derivative(rotation, omega);
  xdot.segment<9>(si::kRotation) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rotation_dot.data());
  xdot.segment<3>(si::kPosition) = x.segment<3>(si::kVelocity);
  xdot.segment<3>(si::kAngularVelocity) = params.inertia.ldlt().solve(torque);
  xdot.segment<3>(si::kVelocity) = params.gravity + force / params.mass;
  return xdot;
}

StateVector dynamics(const HromState& x, const InputVector& u, const BodyParams& params) {
  const StateVector flat = x.flatten();
  if (!flat.allFinite() || !u.flatten().allFinite()) {
    throw std::domain_error("dynamics: non-finite state or input");
  }
  return state_derivative(flat, u, params);
}

Energies energies(const StateVector& x, const BodyParams& params) {
  const Vec3 v = x.segment<3>(si::kVelocity);
  const Vec3 w = x.segment<3>(si::kAngularVelocity);
  Energies e;
  e.kinetic = 0.5 * params.mass * v.dot(v) + 0.5 * w.dot(params.inertia * w);
  e.potential = -params.mass * x.segment<3>(si::kPosition).dot(params.gravity);
  return e;
}

Energies energies(const HromState& x, const BodyParams& params) {
  return energies(x.flatten(), params);
}

}  // namespace wair
