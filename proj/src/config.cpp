#include "wair/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace wair {

using nlohmann::json;

namespace {

/// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void get(const std::string& key, Vec3& out) {
    std::vector<double> v{out.x(), out.y(), out.z()};
    get(key, v);
    if (v.size() != 3) throw ConfigError(where(key) + ": expected 3 numbers");
    out = Vec3(v[0], v[1], v[2]);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : empty(), where(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_body(Section s, BodyParams& body) {
  s.get("mass", body.mass);
  Vec3 inertia = body.inertia.diagonal();
  s.get("inertia_diagonal", inertia);
  body.inertia = inertia.asDiagonal();
  std::vector<std::vector<double>> hips;
  for (const Vec3& h : body.hip_offsets) hips.push_back({h.x(), h.y(), h.z()});
  s.get("hip_offsets", hips);
  if (hips.size() != kNumLegs) throw ConfigError(s.where("hip_offsets") + ": expected 4 entries");
  for (int i = 0; i < kNumLegs; ++i) {
    if (hips[i].size() != 3) throw ConfigError(s.where("hip_offsets") + ": expected 3 numbers per leg");
    body.hip_offsets[i] = Vec3(hips[i][0], hips[i][1], hips[i][2]);
  }
  s.get("gravity", body.gravity);
  s.get("leg_length_min", body.leg_length_min);
  s.get("leg_length_max", body.leg_length_max);
  s.finish();
}

void read_contact(Section s, ContactParams& c, double& cone_mu) {
  s.get("k1", c.k1);
  s.get("k2", c.k2);
  s.get("mu_c", c.mu_c);
  s.get("mu_s", c.mu_s);
  s.get("mu_v", c.mu_v);
  s.get("v_s", c.v_s);
  s.get("cone_mu", cone_mu);
  s.finish();
}

void read_weights(Section s, CostWeightSettings& w) {
  s.get("leg_angle", w.leg_angle);
  s.get("leg_length", w.leg_length);
  s.get("leg_rate", w.leg_rate);
  s.get("rotation", w.rotation);
  s.get("position", w.position);
  s.get("angular_velocity", w.angular_velocity);
  s.get("velocity", w.velocity);
  s.get("joint_accel", w.joint_accel);
  s.get("grf_tangential", w.grf_tangential);
  s.get("grf_normal", w.grf_normal);
  s.get("thrust", w.thrust);
  s.finish();
}

void read_solver(Section s, nlp::SolveOptions& o) {
  s.get("tol_eq", o.tol_eq);
  s.get("tol_ineq", o.tol_ineq);
  s.get("tol_step", o.tol_step);
  s.get("tol_optimality", o.tol_optimality);
  s.get("max_outer_iterations", o.max_outer_iterations);
  s.get("max_inner_iterations", o.max_inner_iterations);
  s.get("penalty_initial", o.penalty_initial);
  s.get("penalty_growth", o.penalty_growth);
  s.get("penalty_max", o.penalty_max);
  s.get("fd_step", o.fd_step);
  s.get("bfgs_memory", o.bfgs_memory);
  s.get("curvature_refresh", o.curvature_refresh);
  s.get("verbose", o.verbose);
  s.finish();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ScenarioConfig::validate() const {
  try {
    body.validate();
    contact.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(positive(cone_mu), "contact.cone_mu must be positive");
  require(thrust_max.allFinite() && thrust_max.minCoeff() >= 0.0,
          "thruster.max must be finite and non-negative");
  require(positive(gait.stride_period), "gait.stride_period must be positive");
  require(std::isfinite(gait.stride_length) && gait.stride_length >= 0.0,
          "gait.stride_length must be non-negative");
  require(positive(gait.body_height), "gait.body_height must be positive");
  require(std::isfinite(gait.swing_height) && gait.swing_height >= 0.0,
          "gait.swing_height must be non-negative");
  require(gait.strides >= 1, "gait.strides must be at least 1");
  require(transcription.knots >= 2, "transcription.knots must be at least 2");
  require(positive(transcription.fd_step), "transcription.fd_step must be positive");
  const CostWeightSettings& w = transcription.weights;
  for (double v : {w.leg_angle, w.leg_length, w.leg_rate, w.rotation, w.position, w.angular_velocity,
                   w.velocity, w.joint_accel, w.grf_tangential, w.grf_normal, w.thrust}) {
    require(std::isfinite(v) && v >= 0.0, "transcription.weights must be finite and non-negative");
  }
  require(positive(simulation.dt), "simulation.dt must be positive");
  require(positive(simulation.duration), "simulation.duration must be positive");
  require(simulation.integrator == "euler" || simulation.integrator == "rk4",
          "simulation.integrator must be \"euler\" or \"rk4\"");
  require(std::isfinite(simulation.slope_deg) && simulation.slope_deg >= 0.0 &&
              simulation.slope_deg * kDegToRad <= kMaxSlope + 1e-12,
          "simulation.slope_deg must lie in [0, 60]");
  require(simulation.initial.mode == "standing" || simulation.initial.mode == "airborne",
          "simulation.initial.mode must be \"standing\" or \"airborne\"");
  require(positive(simulation.initial.height), "simulation.initial.height must be positive");
  require(simulation.initial.velocity.allFinite() && simulation.initial.angular_velocity.allFinite(),
          "simulation.initial velocities must be finite");
  require(solver.max_outer_iterations >= 1 && solver.max_inner_iterations >= 1,
          "solver iteration limits must be at least 1");
  require(positive(solver.tol_eq) && positive(solver.tol_ineq) && positive(solver.tol_optimality) &&
              positive(solver.fd_step) && std::isfinite(solver.tol_step) && solver.tol_step >= 0.0,
          "solver tolerances must be positive");
  require(positive(solver.penalty_initial) && solver.penalty_growth > 1.0 &&
              solver.penalty_max >= solver.penalty_initial,
          "solver penalty schedule is inconsistent");
  require(solver.bfgs_memory >= 1 && solver.curvature_refresh >= 1,
          "solver.bfgs_memory and solver.curvature_refresh must be at least 1");
  require(!slopes_deg.empty(), "slopes_deg must not be empty");
  for (double s : slopes_deg) {
    require(std::isfinite(s) && s >= 0.0 && s * kDegToRad <= kMaxSlope + 1e-12,
            "slopes_deg entries must lie in [0, 60]");
  }
  require(!output_dir.empty(), "output_dir must not be empty");
}

ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;
  Section root(j, "");
  int version = -1;
  if (!j.is_object() || !j.contains("schema_version")) throw ConfigError("missing schema_version");
  root.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  read_body(root.child("body"), c.body);
  read_contact(root.child("contact"), c.contact, c.cone_mu);
  {
    Section s = root.child("thruster");
    s.get("max", c.thrust_max);
    s.finish();
  }
  {
    Section s = root.child("gait");
    s.get("stride_period", c.gait.stride_period);
    s.get("stride_length", c.gait.stride_length);
    s.get("body_height", c.gait.body_height);
    s.get("swing_height", c.gait.swing_height);
    s.get("strides", c.gait.strides);
    s.finish();
  }
  {
    Section s = root.child("transcription");
    s.get("knots", c.transcription.knots);
    s.get("free_final_time", c.transcription.free_final_time);
    s.get("fd_step", c.transcription.fd_step);
    read_weights(s.child("weights"), c.transcription.weights);
    s.finish();
  }
  {
    Section s = root.child("simulation");
    s.get("dt", c.simulation.dt);
    s.get("duration", c.simulation.duration);
    s.get("integrator", c.simulation.integrator);
    s.get("slope_deg", c.simulation.slope_deg);
    Section init = s.child("initial");
    init.get("mode", c.simulation.initial.mode);
    init.get("height", c.simulation.initial.height);
    init.get("velocity", c.simulation.initial.velocity);
    init.get("angular_velocity", c.simulation.initial.angular_velocity);
    init.finish();
    s.finish();
  }
  read_solver(root.child("solver"), c.solver);
  root.get("slopes_deg", c.slopes_deg);
  root.get("output_dir", c.output_dir);
  root.finish();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {
json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
}  // namespace

json to_json(const ScenarioConfig& c) {
  json hips = json::array();
  for (const Vec3& h : c.body.hip_offsets) hips.push_back(vec(h));
  const CostWeightSettings& w = c.transcription.weights;
  const nlp::SolveOptions& o = c.solver;
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"body",
       {{"mass", c.body.mass},
        {"inertia_diagonal", vec(c.body.inertia.diagonal())},
        {"hip_offsets", hips},
        {"gravity", vec(c.body.gravity)},
        {"leg_length_min", c.body.leg_length_min},
        {"leg_length_max", c.body.leg_length_max}}},
      {"contact",
       {{"k1", c.contact.k1},
        {"k2", c.contact.k2},
        {"mu_c", c.contact.mu_c},
        {"mu_s", c.contact.mu_s},
        {"mu_v", c.contact.mu_v},
        {"v_s", c.contact.v_s},
        {"cone_mu", c.cone_mu}}},
      {"thruster", {{"max", vec(c.thrust_max)}}},
      {"gait",
       {{"stride_period", c.gait.stride_period},
        {"stride_length", c.gait.stride_length},
        {"body_height", c.gait.body_height},
        {"swing_height", c.gait.swing_height},
        {"strides", c.gait.strides}}},
      {"transcription",
       {{"knots", c.transcription.knots},
        {"free_final_time", c.transcription.free_final_time},
        {"fd_step", c.transcription.fd_step},
        {"weights",
         {{"leg_angle", w.leg_angle},
          {"leg_length", w.leg_length},
          {"leg_rate", w.leg_rate},
          {"rotation", w.rotation},
          {"position", w.position},
          {"angular_velocity", w.angular_velocity},
          {"velocity", w.velocity},
          {"joint_accel", w.joint_accel},
          {"grf_tangential", w.grf_tangential},
          {"grf_normal", w.grf_normal},
          {"thrust", w.thrust}}}}},
      {"simulation",
       {{"dt", c.simulation.dt},
        {"duration", c.simulation.duration},
        {"integrator", c.simulation.integrator},
        {"slope_deg", c.simulation.slope_deg},
        {"initial",
         {{"mode", c.simulation.initial.mode},
          {"height", c.simulation.initial.height},
          {"velocity", vec(c.simulation.initial.velocity)},
          {"angular_velocity", vec(c.simulation.initial.angular_velocity)}}}}},
      {"solver",
       {{"tol_eq", o.tol_eq},
        {"tol_ineq", o.tol_ineq},
        {"tol_step", o.tol_step},
        {"tol_optimality", o.tol_optimality},
        {"max_outer_iterations", o.max_outer_iterations},
        {"max_inner_iterations", o.max_inner_iterations},
        {"penalty_initial", o.penalty_initial},
        {"penalty_growth", o.penalty_growth},
        {"penalty_max", o.penalty_max},
        {"fd_step", o.fd_step},
        {"bfgs_memory", o.bfgs_memory},
        {"curvature_refresh", o.curvature_refresh},
        {"verbose", o.verbose}}},
      {"slopes_deg", c.slopes_deg},
      {"output_dir", c.output_dir},
  };
}

}  // namespace wair
