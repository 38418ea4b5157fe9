#include "wair/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wair {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& trajectory_csv_header() {
  static const std::string header = [] {
    std::vector<std::string> cols{"t"};
    const char* joint[3] = {"phi", "gamma", "r"};
    for (int i = 0; i < kNumLegs; ++i) {
      for (const char* n : joint) cols.push_back(std::string(n) + "_" + std::to_string(i));
    }
    for (int i = 0; i < kNumLegs; ++i) {
      for (const char* n : joint) cols.push_back(std::string(n) + "_dot_" + std::to_string(i));
    }
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 3; ++r) cols.push_back("R_" + std::to_string(r) + std::to_string(c));
    }
    const char* axes[3] = {"x", "y", "z"};
    for (const char* a : axes) cols.push_back(std::string("p_") + a);
    for (const char* a : axes) cols.push_back(std::string("omega_") + a);
    for (const char* a : axes) cols.push_back(std::string("v_") + a);
    for (int i = 0; i < kNumLegs; ++i) {
      for (const char* a : axes) cols.push_back("grf_" + std::to_string(i) + "_" + a);
    }
    for (const char* a : axes) cols.push_back(std::string("thrust_") + a);
    cols.push_back("K");
    cols.push_back("V");
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    return out;
  }();
  return header;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << trajectory_csv_header() << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const StateVector x = traj.states[k].flatten();
    const InputVector& u = k < traj.inputs.size() ? traj.inputs[k] : traj.final_input;
    out << format_double(traj.times[k]);
    for (int i = 0; i < kStateDim; ++i) out << ',' << format_double(x[i]);
    for (const Vec3& f : traj.grf_log[k]) {
      for (int a = 0; a < 3; ++a) out << ',' << format_double(f[a]);
    }
    for (int a = 0; a < 3; ++a) out << ',' << format_double(u.thrust[a]);
    out << ',' << format_double(traj.energy_log[k].kinetic) << ','
        << format_double(traj.energy_log[k].potential) << '\n';
  }
}

double energy_drift(const Trajectory& traj) {
  if (traj.energy_log.empty()) return 0.0;
  const double e0 = traj.energy_log.front().total();
  double drift = 0.0;
  for (const Energies& e : traj.energy_log) drift = std::max(drift, std::abs(e.total() - e0));
  return drift / std::max(std::abs(e0), 1.0);
}

json trajectory_summary(const Trajectory& traj) {
  json events = json::array();
  for (const ContactEvent& e : traj.events) {
    events.push_back({{"time", e.time},
                      {"leg", e.leg},
                      {"kind", e.kind == ContactEvent::Kind::kTouchdown ? "touchdown" : "liftoff"},
                      {"unplanned", e.unplanned}});
  }
  return json{
      {"rows", traj.states.size()},
      {"final_time", traj.times.empty() ? 0.0 : traj.times.back()},
      {"energy_initial", traj.energy_log.empty() ? 0.0 : traj.energy_log.front().total()},
      {"energy_final", traj.energy_log.empty() ? 0.0 : traj.energy_log.back().total()},
      {"energy_drift", energy_drift(traj)},
      {"cone_violations", traj.cone_violations},
      {"min_cone_margin", traj.min_cone_margin},
      {"events", events},
  };
}

namespace {
json to_array(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}
}  // namespace

json transcription_to_json(const Transcription& tr) {
  json states = json::array();
  json inputs = json::array();
  for (const VectorXd& x : tr.states) states.push_back(to_array(x));
  for (const VectorXd& u : tr.inputs) inputs.push_back(to_array(u));
  return json{{"knot_times", tr.knot_times},
              {"free_final_time", tr.free_final_time},
              {"states", states},
              {"inputs", inputs}};
}

json plan_to_json(const PlanResult& result, const WairInstance& instance) {
  json stance = json::array();
  for (const StanceFlags& s : instance.knot_stance) stance.push_back(json(s));
  json j = transcription_to_json(result.plan);
  j["slope_rad"] = instance.slope;
  j["grf_frame"] = "terrain";
  j["stance"] = stance;
  j["status"] = nlp::to_string(result.report.status);
  return j;
}

json solve_report_to_json(const nlp::SolveReport& r) {
  return json{
      {"status", nlp::to_string(r.status)},
      {"message", r.message},
      {"outer_iterations", r.outer_iterations},
      {"inner_iterations", r.inner_iterations},
      {"final_cost", r.final_cost},
      {"max_equality_violation", r.max_equality_violation},
      {"min_inequality_margin", r.min_inequality_margin},
      {"lagrangian_gradient_norm", r.lagrangian_gradient_norm},
      {"penalty", r.penalty},
      {"wall_time_s", r.wall_time},
      {"violation_history", r.violation_history},
  };
}

const std::string& metrics_csv_header() {
  static const std::string header =
      "slope_deg,status,final_cost,max_defect,max_boundary_residual,min_cone_margin,"
      "min_swing_clearance,peak_joint_accel,peak_stance_grf,thruster_impulse,climb_distance,"
      "replay_grf_divergence,replay_diverged";
  return header;
}

std::string metrics_csv_row(const WairMetrics& m) {
  std::ostringstream out;
  out << format_double(m.slope_deg) << ',' << m.status;
  for (double v : {m.final_cost, m.max_defect, m.max_boundary_residual, m.min_cone_margin,
                   m.min_swing_clearance, m.peak_joint_accel, m.peak_stance_grf, m.thruster_impulse,
                   m.climb_distance, m.replay_grf_divergence}) {
    out << ',' << format_double(v);
  }
  out << ',' << (m.replay_diverged ? 1 : 0);
  return out.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<WairMetrics>& rows) {
  out << metrics_csv_header() << '\n';
  for (const WairMetrics& m : rows) out << metrics_csv_row(m) << '\n';
}

InputSchedule schedule_from_json(const json& j) {
  InputSchedule s;
  try {
    if (!j.is_object()) throw std::invalid_argument("schedule: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "times" && it.key() != "inputs" && it.key() != "stance") {
        throw std::invalid_argument("schedule: unknown key '" + it.key() + "'");
      }
    }
    s.times = j.at("times").get<std::vector<double>>();
    for (const auto& row : j.at("inputs")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != kInputDim) throw std::invalid_argument("schedule: each input needs 27 numbers");
      s.inputs.push_back(InputVector::unflatten(InputFlat(Eigen::Map<const InputFlat>(v.data()))));
    }
    if (j.contains("stance")) {
      for (const auto& row : j.at("stance")) s.stance.push_back(row.get<StanceFlags>());
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("schedule: ") + e.what());
  }
  s.validate();
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace wair
