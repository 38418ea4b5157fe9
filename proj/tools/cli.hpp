#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wair/config.hpp"

namespace wair::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitCheckFailed = 4;

struct CommonArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> slopes;  // comma-separated degrees
  std::uint64_t seed = 0;             // reserved; runs are deterministic
};

/// Parses "0,10,20" into degrees. Throws ConfigError on malformed lists.
std::vector<double> parse_slope_list(const std::string& text);

int cmd_simulate(const CommonArgs& args, const std::optional<std::string>& schedule_path,
                 std::ostream& out, std::ostream& err);
int cmd_optimize(const CommonArgs& args, std::ostream& out, std::ostream& err);
int cmd_check(const CommonArgs& args, std::ostream& out, std::ostream& err);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The invariant suite run by `check`, evaluated with the config's parameters.
std::vector<CheckResult> run_checks(const ScenarioConfig& config);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wair::cli
