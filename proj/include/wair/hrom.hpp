#pragma once

// Reduced-order model of the thruster-assisted quadruped: a 6-DOF torso
// carrying all of the mass, four massless legs (hip frontal angle, hip
// sagittal angle, prismatic length), a thruster resultant applied at the COM,
// and ground reaction forces applied at the feet.

#include <array>

#include <Eigen/Dense>

#include "wair/spatial_math.hpp"

namespace wair {

inline constexpr int kNumLegs = 4;
inline constexpr int kLegDofs = 3 * kNumLegs;
inline constexpr int kStateDim = 42;
inline constexpr int kInputDim = 27;

using Vector12 = Eigen::Matrix<double, kLegDofs, 1>;
using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using InputFlat = Eigen::Matrix<double, kInputDim, 1>;
using Matrix36 = Eigen::Matrix<double, 3, 6>;

// Offsets into the flattened state x = [q_L, qdot_L, r_b, p_b, omega_b, pdot_b].
// r_b stacks the columns of R_b.
namespace state_index {
inline constexpr int kLegPosition = 0;
inline constexpr int kLegVelocity = 12;
inline constexpr int kRotation = 24;
inline constexpr int kPosition = 33;
inline constexpr int kAngularVelocity = 36;
inline constexpr int kVelocity = 39;
}  // namespace state_index

// Offsets into the flattened input u = [u_L, u_g(4 x 3), u_T].
namespace input_index {
inline constexpr int kJointAccel = 0;
inline constexpr int kGrf = 12;
inline constexpr int kThrust = 24;
}  // namespace input_index

// Legs are numbered front-left, front-right, rear-left, rear-right.
// Diagonal trot pairs are {0, 3} and {1, 2}.
struct BodyParams {
  double mass = 5.0;
  Mat3 inertia = Eigen::Vector3d(0.0981867, 0.0844185, 0.164599).asDiagonal();
  std::array<Vec3, kNumLegs> hip_offsets = {Vec3(0.15, 0.07, 0.0), Vec3(0.15, -0.07, 0.0),
                                            Vec3(-0.15, 0.07, 0.0), Vec3(-0.15, -0.07, 0.0)};
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  double leg_length_min = 0.15;
  double leg_length_max = 0.45;

  /// Throws std::invalid_argument on non-positive mass, a non-SPD inertia or
  /// inverted leg length bounds.
  void validate() const;
};

struct LegJointState {
  Vector12 q = Vector12::Zero();
  Vector12 q_dot = Vector12::Zero();

  double phi(int leg) const { return q[3 * leg]; }
  double gamma(int leg) const { return q[3 * leg + 1]; }
  double length(int leg) const { return q[3 * leg + 2]; }
  double phi_dot(int leg) const { return q_dot[3 * leg]; }
  double gamma_dot(int leg) const { return q_dot[3 * leg + 1]; }
  double length_dot(int leg) const { return q_dot[3 * leg + 2]; }

  void set_leg(int leg, double phi, double gamma, double length);
};

struct BodyState {
  Vec3 position = Vec3::Zero();
  RotationMatrix rotation;
  Vec3 velocity = Vec3::Zero();          // world frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
};

struct HromState {
  LegJointState legs;
  BodyState body;

  StateVector flatten() const;
  /// Throws std::invalid_argument if the rotation block is not in SO(3).
  static HromState unflatten(const StateVector& x);
  /// Projects the rotation block onto SO(3) before unpacking.
  static HromState unflatten_projected(const StateVector& x);
};

/// Inputs: joint accelerations, per-foot GRFs (world frame, zero for swing
/// feet) and the thruster resultant at the COM (world frame).
struct InputVector {
  Vector12 joint_accel = Vector12::Zero();
  std::array<Vec3, kNumLegs> grf = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  Vec3 thrust = Vec3::Zero();

  InputFlat flatten() const;
  static InputVector unflatten(const InputFlat& u);
};

struct Energies {
  double kinetic = 0.0;
  double potential = 0.0;
  double total() const { return kinetic + potential; }
};

/// Foot offset from the hip in the body frame, R_y(phi) R_x(gamma) [0, 0, -r].
Vec3 leg_vector(double phi, double gamma, double length);

/// Leg lengths below leg_length_min are clamped to it in all kinematics.
double effective_length(double length, const BodyParams& params);

Vec3 foot_position(const BodyState& body, const LegJointState& legs, int leg,
                   const BodyParams& params);
Vec3 foot_velocity(const BodyState& body, const LegJointState& legs, int leg,
                   const BodyParams& params);

/// d(pdot_f)/dv with v = [pdot_b, omega_b]. The generalized force of a foot
/// force f is grf_jacobian(...)^T f.
Matrix36 grf_jacobian(const BodyState& body, const LegJointState& legs, int leg,
                      const BodyParams& params);

/// Flattened-state variants. The rotation block is used as a plain 3x3
/// matrix, so these accept states that are only approximately in SO(3).
Mat3 rotation_block(const StateVector& x);
Vec3 foot_position(const StateVector& x, int leg, const BodyParams& params);
Vec3 foot_velocity(const StateVector& x, int leg, const BodyParams& params);

/// Full state tangent xdot = f(x, u). Throws std::domain_error on non-finite input.
StateVector dynamics(const HromState& x, const InputVector& u, const BodyParams& params);
StateVector state_derivative(const StateVector& x, const InputVector& u,
                             const BodyParams& params);

Energies energies(const HromState& x, const BodyParams& params);
Energies energies(const StateVector& x, const BodyParams& params);

}  // namespace wair
