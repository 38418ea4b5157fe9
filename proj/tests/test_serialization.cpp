#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "test_util.hpp"
#include "wair/serialization.hpp"

namespace wair {
namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

TEST(Serialization, TrajectoryHeaderIsStable) {
  const std::string golden =
      "t,phi_0,gamma_0,r_0,phi_1,gamma_1,r_1,phi_2,gamma_2,r_2,phi_3,gamma_3,r_3,"
      "phi_dot_0,gamma_dot_0,r_dot_0,phi_dot_1,gamma_dot_1,r_dot_1,phi_dot_2,gamma_dot_2,r_dot_2,"
      "phi_dot_3,gamma_dot_3,r_dot_3,R_00,R_10,R_20,R_01,R_11,R_21,R_02,R_12,R_22,p_x,p_y,p_z,"
      "omega_x,omega_y,omega_z,v_x,v_y,v_z,grf_0_x,grf_0_y,grf_0_z,grf_1_x,grf_1_y,grf_1_z,"
      "grf_2_x,grf_2_y,grf_2_z,grf_3_x,grf_3_y,grf_3_z,thrust_x,thrust_y,thrust_z,K,V";
  EXPECT_EQ(trajectory_csv_header(), golden);
  EXPECT_EQ(split(golden).size(), 1u + 12 + 12 + 9 + 3 + 3 + 3 + 12 + 3 + 2);
}

TEST(Serialization, MetricsHeaderIsStable) {
  EXPECT_EQ(metrics_csv_header(),
            "slope_deg,status,final_cost,max_defect,max_boundary_residual,min_cone_margin,"
            "min_swing_clearance,peak_joint_accel,peak_stance_grf,thruster_impulse,climb_distance,"
            "replay_grf_divergence,replay_diverged");
}

TEST(Serialization, DoublesRoundTripExactly) {
  test::Rng rng(51);
  for (int n = 0; n < 1000; ++n) {
    const double v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Serialization, TrajectoryRowsMatchStates) {
  HromState x;
  for (int i = 0; i < kNumLegs; ++i) x.legs.set_leg(i, 0.0, 0.0, 0.2);
  x.body.position = Vec3(0.0, 0.0, 1.0);
  RolloutOptions options;
  options.dt = 0.01;
  options.duration = 0.1;
  const Trajectory traj =
      rollout(x, InputSchedule::constant(InputVector{}), options, BodyParams{}, ContactParams{}, Terrain(0.0));
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  std::stringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, trajectory_csv_header());
  int rows = 0;
  while (std::getline(in, line)) {
    const std::vector<std::string> cells = split(line);
    ASSERT_EQ(cells.size(), 60u);
    EXPECT_EQ(std::strtod(cells[0].c_str(), nullptr), traj.times[rows]);
    EXPECT_EQ(std::strtod(cells[36].c_str(), nullptr), traj.states[rows].body.position.z());
    ++rows;
  }
  EXPECT_EQ(rows, 11);
}

TEST(Serialization, EnergyDriftIsRelative) {
  Trajectory traj;
  traj.energy_log = {{2.0, 8.0}, {2.5, 8.0}, {1.0, 8.5}};
  EXPECT_DOUBLE_EQ(energy_drift(traj), 0.05);
  traj.energy_log = {{0.1, 0.0}, {0.3, 0.0}};
  EXPECT_DOUBLE_EQ(energy_drift(traj), 0.2);
  EXPECT_EQ(energy_drift(Trajectory{}), 0.0);
}

TEST(Serialization, MetricsRowFormatting) {
  WairMetrics m;
  m.slope_deg = 45;
  m.status = "converged";
  m.thruster_impulse = 0.5;
  m.replay_diverged = true;
  const std::vector<std::string> cells = split(metrics_csv_row(m));
  ASSERT_EQ(cells.size(), split(metrics_csv_header()).size());
  EXPECT_EQ(cells[0], "45");
  EXPECT_EQ(cells[1], "converged");
  EXPECT_EQ(cells[9], "0.5");
  EXPECT_EQ(cells.back(), "1");
}

TEST(Serialization, ScheduleFromJson) {
  json j;
  j["times"] = {0.0, 1.0};
  j["inputs"] = json::array({std::vector<double>(27, 0.0), std::vector<double>(27, 1.0)});
  j["stance"] = json::array({{true, false, false, true}, {false, true, true, false}});
  const InputSchedule s = schedule_from_json(j);
  EXPECT_DOUBLE_EQ(s.at(0.5).thrust.z(), 0.5);
  EXPECT_DOUBLE_EQ(s.at(0.5).grf[2].x(), 0.5);
  EXPECT_TRUE(s.stance_at(1.0)[1]);

  json bad = j;
  bad["extra"] = 1;
  EXPECT_THROW(schedule_from_json(bad), std::invalid_argument);
  bad = j;
  bad["inputs"][1] = std::vector<double>(26, 0.0);
  EXPECT_THROW(schedule_from_json(bad), std::invalid_argument);
  bad = j;
  bad["times"] = {1.0, 0.0};
  EXPECT_THROW(schedule_from_json(bad), std::invalid_argument);
  EXPECT_THROW(schedule_from_json(json{{"times", {0.0}}}), std::invalid_argument);
}

TEST(Serialization, TranscriptionJsonLayout) {
  Transcription tr = Transcription::uniform(3, 0.8, 2, 1);
  tr.states[2] << 1.5, -2.0;
  const json j = transcription_to_json(tr);
  EXPECT_EQ(j.at("knot_times").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("states")[2][1].get<double>(), -2.0);
  EXPECT_EQ(j.at("inputs")[0].size(), 1u);
  EXPECT_FALSE(j.at("free_final_time").get<bool>());
}

TEST(Serialization, SolveReportJson) {
  nlp::SolveReport r;
  r.status = nlp::SolveStatus::kLineSearchFailure;
  r.violation_history = {1.0, 0.5};
  const json j = solve_report_to_json(r);
  EXPECT_EQ(j.at("status"), "line-search-failure");
  EXPECT_EQ(j.at("violation_history").size(), 2u);
  EXPECT_EQ(nlp::to_string(nlp::SolveStatus::kConverged), "converged");
  EXPECT_EQ(nlp::to_string(nlp::SolveStatus::kMaxIterations), "max-iter");
}

}  // namespace
}  // namespace wair
