#pragma once

// File formats. Every floating-point value is written with 17 significant
// digits so that files round-trip and compare byte-for-byte.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wair/collocation.hpp"
#include "wair/nlp.hpp"
#include "wair/simulation.hpp"
#include "wair/wair.hpp"

namespace wair {

std::string format_double(double v);

/// t, 12 q_L, 12 qdot_L, 9 r_b, 3 p_b, 3 omega_b, 3 pdot_b, 12 GRF, 3 u_T, K, V.
const std::string& trajectory_csv_header();
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Largest |E(t) - E(0)| relative to max(|E(0)|, 1).
double energy_drift(const Trajectory& traj);
nlohmann::json trajectory_summary(const Trajectory& traj);

nlohmann::json transcription_to_json(const Transcription& tr);
nlohmann::json plan_to_json(const PlanResult& result, const WairInstance& instance);
nlohmann::json solve_report_to_json(const nlp::SolveReport& report);

const std::string& metrics_csv_header();
std::string metrics_csv_row(const WairMetrics& m);
void write_metrics_csv(std::ostream& out, const std::vector<WairMetrics>& rows);

/// Piecewise-linear schedule from JSON:
///   {"times": [...], "inputs": [[27 numbers], ...], "stance": [[4 bools], ...]}
/// Inputs use the flattened layout [u_L, u_g, u_T] in the world frame;
/// "stance" is optional. Throws std::invalid_argument on malformed input.
InputSchedule schedule_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace wair
