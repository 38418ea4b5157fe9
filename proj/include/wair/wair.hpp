#pragma once

// Wing-assisted incline running: slope instances, the diagonal trot, the
// reference climb, planning, replay validation and slope sweeps.

#include <optional>
#include <string>
#include <vector>

#include "wair/config.hpp"
#include "wair/hrom_transcription.hpp"
#include "wair/nlp.hpp"
#include "wair/simulation.hpp"

namespace wair {

/// Diagonal trot with 50% duty: legs {0, 3} stand during the first half of
/// every stride, legs {1, 2} during the second. Half-strides are the
/// intervals [0, H], (H, 2H], (2H, 3H], ... so a knot on a phase boundary
/// belongs to the phase that ends there.
class GaitSchedule {
 public:
  GaitSchedule() = default;
  /// Throws std::invalid_argument unless stride_period > 0.
  explicit GaitSchedule(double stride_period);

  double stride_period() const { return period_; }
  double half_period() const { return 0.5 * period_; }
  /// Index of the half-stride containing t; 0 for t <= H.
  long phase_index(double t) const;
  bool in_stance(int leg, double t) const;
  StanceFlags stance_at(double t) const;
  /// 0 for legs {0, 3}, 1 for legs {1, 2}.
  static int pair_of(int leg);

 private:
  double period_ = 0.8;
};

/// Nominal climb in the slope frame: the torso is pitched with the surface,
/// moves at constant speed along it, and the feet follow the gait.
class ReferenceClimb {
 public:
  ReferenceClimb(const Terrain& terrain, const GaitSchedule& gait, const GaitSettings& settings,
                 const BodyParams& body, double start_displacement);

  double speed() const;
  /// Torso displacement along the slope at time t.
  double displacement(double t) const;
  /// Foot position in the terrain frame.
  Vec3 foot_terrain(int leg, double t) const;
  /// Full state; leg angles from analytic inverse kinematics, rates from
  /// central differences.
  StateVector state(double t) const;
  /// Joint accelerations by central differences of the rates.
  Vector12 joint_accel(double t) const;

 private:
  Vector12 leg_coordinates(double t) const;

  Terrain terrain_;
  GaitSchedule gait_;
  GaitSettings settings_;
  BodyParams body_;
  double start_ = 0.0;
};

/// Analytic inverse of leg_vector(): (phi, gamma, r) for a body-frame foot offset.
Vec3 leg_inverse_kinematics(const Vec3& foot_from_hip);

struct WairInstance {
  double slope = 0.0;  // rad
  Terrain terrain;
  GaitSchedule gait;
  GaitSettings gait_settings;
  BodyParams body;
  ContactParams contact;
  double cone_mu = 0.7;
  double start_displacement = 0.0;
  double goal_displacement = 0.0;  // along the slope, relative to the start
  std::vector<StanceFlags> knot_stance;
  CollocationProblem problem;
  nlp::SolveOptions solver;
  SimulationSettings simulation;
};

/// stride_index shifts the start of the reference by whole strides.
/// Throws ConfigError on invalid config, std::invalid_argument on slope.
WairInstance build_instance(double slope, const ScenarioConfig& config, int stride_index = 0);

struct WarmStart {
  Transcription guess;
  std::optional<nlp::Multipliers> multipliers;
};

/// Maps a solved plan onto another instance: rigidly rotates the world-frame
/// quantities between the two terrain frames and translates to the new
/// start. An identical instance gets the plan back verbatim.
WarmStart warm_start(const Transcription& plan, const nlp::Multipliers& multipliers,
                     const WairInstance& from, const WairInstance& to);

struct PlanResult {
  Transcription plan;
  nlp::SolveReport report;
  nlp::Multipliers multipliers;
  bool converged() const { return report.status == nlp::SolveStatus::kConverged; }
};

PlanResult plan(const WairInstance& instance, const std::optional<WarmStart>& warm = std::nullopt);

struct WairMetrics {
  double slope_deg = 0.0;
  std::string status;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double final_cost = 0.0;
  double max_defect = 0.0;
  double max_boundary_residual = 0.0;
  double min_cone_margin = 0.0;      // over stance knots, terrain frame
  double min_swing_clearance = 0.0;  // over swing knots
  double peak_joint_accel = 0.0;     // max |u_L| over knots
  double peak_stance_grf = 0.0;      // max |u_g| over stance knots
  double thruster_impulse = 0.0;     // trapezoidal integral of |u_T|
  double climb_distance = 0.0;       // along the slope
  double replay_grf_divergence = 0.0;  // max |sum GRF error| / peak planned sum
  bool replay_diverged = false;
  std::string replay_error;  // non-empty when the replay aborted
};

struct ValidationResult {
  WairMetrics metrics;
  Trajectory replay;
};

/// Metrics of the plan plus a replay of its joint and thruster inputs with
/// contact closed by the contact law.
ValidationResult validate(const PlanResult& result, const WairInstance& instance);

/// Planned inputs in the world frame with the knot stance flags. The replay
/// in validate() zeroes the GRFs of this schedule.
InputSchedule replay_schedule(const Transcription& plan, const WairInstance& instance);

struct SlopeRun {
  WairInstance instance;
  std::optional<PlanResult> result;
  std::optional<ValidationResult> validation;
  std::string error;  // set when the run threw
  WairMetrics metrics;
};

/// plan + validate per slope; each run is warm-started from the latest
/// converged one. Failures are recorded and the sweep continues.
std::vector<SlopeRun> slope_sweep(const ScenarioConfig& config);

}  // namespace wair
