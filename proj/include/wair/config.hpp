#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wair/contact.hpp"
#include "wair/hrom.hpp"
#include "wair/nlp.hpp"

namespace wair {

inline constexpr int kConfigSchemaVersion = 1;

/// Malformed, unreadable or out-of-range scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaitSettings {
  double stride_period = 0.8;  // s
  double stride_length = 0.2;  // m along the slope per stride
  double body_height = 0.3;    // m above the surface
  double swing_height = 0.05;  // m
  int strides = 1;
};

struct CostWeightSettings {
  double leg_angle = 100.0;
  double leg_length = 100.0;
  double leg_rate = 0.1;
  double rotation = 10.0;
  double position = 1000.0;
  double angular_velocity = 1.0;
  double velocity = 10.0;
  double joint_accel = 1e-4;
  double grf_tangential = 1e-1;
  double grf_normal = 1e-4;
  double thrust = 1e-2;
};

struct TranscriptionSettings {
  int knots = 21;
  bool free_final_time = false;
  double fd_step = 1e-6;
  CostWeightSettings weights;
};

struct InitialStateSettings {
  std::string mode = "standing";  // "standing" or "airborne"
  double height = 0.3;            // body height above the surface, m
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
};

struct SimulationSettings {
  double dt = 1e-3;
  double duration = 1.0;
  std::string integrator = "euler";  // "euler" or "rk4"
  double slope_deg = 0.0;
  InitialStateSettings initial;
};

struct ScenarioConfig {
  BodyParams body;
  ContactParams contact;
  double cone_mu = 0.7;
  Vec3 thrust_max = Vec3(10.0, 10.0, 40.0);
  GaitSettings gait;
  TranscriptionSettings transcription;
  SimulationSettings simulation;
  nlp::SolveOptions solver;
  std::vector<double> slopes_deg = {0.0, 10.0, 20.0, 30.0, 45.0};
  std::string output_dir = "out";

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Strict parse: unknown keys and a missing/mismatched schema_version are
/// rejected; absent keys keep their defaults. The result is validated.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& config);

inline constexpr double kDegToRad = 0.017453292519943295;

}  // namespace wair
