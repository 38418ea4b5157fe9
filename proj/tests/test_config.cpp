#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "wair/config.hpp"

namespace wair {
namespace {

using nlohmann::json;

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, MinimalConfigGivesDefaults) {
  const ScenarioConfig c = parse_config(json{{"schema_version", 1}});
  EXPECT_EQ(to_json(c).dump(), to_json(ScenarioConfig{}).dump());
  EXPECT_EQ(c.slopes_deg, (std::vector<double>{0, 10, 20, 30, 45}));
  EXPECT_EQ(c.transcription.knots, 21);
  EXPECT_DOUBLE_EQ(c.cone_mu, 0.7);
}

TEST(Config, RoundTripsThroughJson) {
  json j = json::parse(R"({
    "schema_version": 1,
    "body": {"mass": 4.0, "hip_offsets": [[0.2, 0.1, 0], [0.2, -0.1, 0], [-0.2, 0.1, 0], [-0.2, -0.1, 0]]},
    "contact": {"k1": 2e4, "cone_mu": 0.5},
    "thruster": {"max": [5, 5, 30]},
    "gait": {"stride_period": 1.0, "strides": 2},
    "transcription": {"knots": 11, "weights": {"thrust": 0.5}},
    "simulation": {"dt": 0.002, "integrator": "rk4", "initial": {"mode": "airborne"}},
    "solver": {"max_outer_iterations": 7},
    "slopes_deg": [0, 15],
    "output_dir": "elsewhere"
  })");
  const ScenarioConfig c = parse_config(j);
  EXPECT_DOUBLE_EQ(c.body.mass, 4.0);
  EXPECT_DOUBLE_EQ(c.body.hip_offsets[3].y(), -0.1);
  EXPECT_DOUBLE_EQ(c.contact.k1, 2e4);
  EXPECT_DOUBLE_EQ(c.cone_mu, 0.5);
  EXPECT_DOUBLE_EQ(c.thrust_max.z(), 30.0);
  EXPECT_EQ(c.gait.strides, 2);
  EXPECT_DOUBLE_EQ(c.transcription.weights.thrust, 0.5);
  EXPECT_EQ(c.simulation.integrator, "rk4");
  EXPECT_EQ(c.simulation.initial.mode, "airborne");
  EXPECT_EQ(c.solver.max_outer_iterations, 7);
  EXPECT_EQ(c.output_dir, "elsewhere");
  EXPECT_EQ(to_json(parse_config(to_json(c))).dump(), to_json(c).dump());
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_NE(error_of({{"schema_version", 1}, {"slopes", {0}}}).find("unknown key 'slopes'"), std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 1}, {"contact", {{"k3", 1}}}}).find("unknown key 'contact.k3'"),
            std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 1}, {"simulation", {{"initial", {{"spin", 1}}}}}})
                .find("simulation.initial.spin"),
            std::string::npos);
}

TEST(Config, RequiresSchemaVersion) {
  EXPECT_NE(error_of(json::object()).find("schema_version"), std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 2}}).find("schema_version"), std::string::npos);
  EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_NE(error_of({{"schema_version", 1}, {"contact", {{"k1", 0}}}}).find("k1"), std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 1}, {"slopes_deg", {70}}}), "");
  EXPECT_NE(error_of({{"schema_version", 1}, {"simulation", {{"integrator", "midpoint"}}}}), "");
  EXPECT_NE(error_of({{"schema_version", 1}, {"transcription", {{"knots", 1}}}}), "");
  EXPECT_NE(error_of({{"schema_version", 1}, {"body", {{"mass", "heavy"}}}}).find("body.mass"), std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 1}, {"thruster", {{"max", {1, 2}}}}}).find("thruster.max"),
            std::string::npos);
  EXPECT_NE(error_of({{"schema_version", 1}, {"solver", {{"penalty_growth", 1.0}}}}), "");
}

TEST(Config, LoadReportsPath) {
  const std::filesystem::path missing = std::filesystem::temp_directory_path() / "wair_no_such_config.json";
  try {
    load_config(missing);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  const std::filesystem::path broken = std::filesystem::temp_directory_path() / "wair_broken_config.json";
  std::ofstream(broken) << "{ not json";
  EXPECT_THROW(load_config(broken), ConfigError);
  std::filesystem::remove(broken);
}

}  // namespace
}  // namespace wair
