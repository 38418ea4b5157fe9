#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "wair/collocation.hpp"
#include "wair/contact.hpp"
#include "wair/hrom.hpp"
#include "wair/nlp.hpp"
#include "wair/serialization.hpp"
#include "wair/simulation.hpp"
#include "wair/wair.hpp"

namespace wair::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> parse_slope_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("--slopes: not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw ConfigError("--slopes: not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--slopes: empty list");
  return out;
}

namespace {

ScenarioConfig load(const CommonArgs& args) {
  ScenarioConfig config = load_config(args.config);
  if (args.out) config.output_dir = *args.out;
  if (args.slopes) config.slopes_deg = parse_slope_list(*args.slopes);
  config.validate();
  return config;
}

HromState initial_state(const ScenarioConfig& config, const Terrain& terrain) {
  const InitialStateSettings& init = config.simulation.initial;
  HromState x;
  x.body.position = terrain.to_world(Vec3(0.0, 0.0, init.height));
  x.body.rotation = terrain.surface_to_world();
  x.body.velocity = init.velocity;
  x.body.angular_velocity = init.angular_velocity;
  const bool standing = init.mode == "standing";
  for (int i = 0; i < kNumLegs; ++i) {
    const double hip_height = config.body.hip_offsets[i].z();
    const double r = standing ? init.height + hip_height : config.body.leg_length_min;
    x.legs.set_leg(i, 0.0, 0.0, r);
  }
  return x;
}

Integrator integrator_of(const ScenarioConfig& config) {
  return config.simulation.integrator == "rk4" ? Integrator::kRk4 : Integrator::kEuler;
}

std::string slope_dir_name(double deg) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "slope_%g", deg);
  return buf;
}

}  // namespace

int cmd_simulate(const CommonArgs& args, const std::optional<std::string>& schedule_path,
                 std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  InputSchedule schedule;
  try {
    config = load(args);
    const bool standing = config.simulation.initial.mode == "standing";
    if (schedule_path) {
      std::ifstream in(*schedule_path);
      if (!in) throw ConfigError("cannot open schedule file " + *schedule_path);
      try {
        schedule = schedule_from_json(json::parse(in));
      } catch (const std::exception& e) {
        throw ConfigError(*schedule_path + ": " + e.what());
      }
    } else {
      schedule = InputSchedule::constant(InputVector{});
      schedule.stance.push_back({standing, standing, standing, standing});
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const Terrain terrain(config.simulation.slope_deg * kDegToRad);
    RolloutOptions options;
    options.dt = config.simulation.dt;
    options.duration = config.simulation.duration;
    options.integrator = integrator_of(config);
    options.cone_mu = config.cone_mu;
    const Trajectory traj =
        rollout(initial_state(config, terrain), schedule, options, config.body, config.contact, terrain);

    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    write_text(dir / "trajectory.csv", csv.str());
    const json summary = trajectory_summary(traj);
    write_json(dir / "summary.json", summary);
    out << "rows " << traj.states.size() << ", energy drift " << format_double(energy_drift(traj))
        << ", cone violations " << traj.cone_violations << "\n";
  } catch (const SimulationAbort& e) {
    err << "simulation aborted at step " << e.step() << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_optimize(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  try {
    config = load(args);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const std::vector<SlopeRun> runs = slope_sweep(config);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::vector<WairMetrics> rows;
    int converged = 0;
    for (const SlopeRun& run : runs) {
      rows.push_back(run.metrics);
      const fs::path slope_dir = dir / slope_dir_name(run.metrics.slope_deg);
      fs::create_directories(slope_dir);
      json report = json::object();
      if (run.result) {
        if (run.result->converged()) ++converged;
        write_json(slope_dir / "plan.json", plan_to_json(*run.result, run.instance));
        report = solve_report_to_json(run.result->report);
      }
      if (run.validation && !run.validation->replay.states.empty()) {
        std::ostringstream csv;
        write_trajectory_csv(csv, run.validation->replay);
        write_text(slope_dir / "trajectory.csv", csv.str());
      }
      report["slope_deg"] = run.metrics.slope_deg;
      if (!run.error.empty()) report["error"] = run.error;
      if (!run.metrics.replay_error.empty()) report["replay_error"] = run.metrics.replay_error;
      write_json(slope_dir / "solve_report.json", report);
      out << std::setw(6) << run.metrics.slope_deg << " deg  " << run.metrics.status;
      if (!run.error.empty()) out << "  (" << run.error << ")";
      out << "\n";
      if (!run.error.empty()) err << "slope " << run.metrics.slope_deg << ": " << run.error << "\n";
    }
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    write_text(dir / "metrics.csv", csv.str());
    if (converged == 0) {
      err << "no slope converged\n";
      return kExitNoConvergence;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

CheckResult check_kinematics(const ScenarioConfig& config) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const BodyParams& body = config.body;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    HromState x;
    for (int i = 0; i < kNumLegs; ++i) {
      x.legs.set_leg(i, 0.5 * u(rng), 0.5 * u(rng),
                     0.5 * (body.leg_length_min + body.leg_length_max) + 0.1 * u(rng));
    }
    for (int k = 0; k < kLegDofs; ++k) x.legs.q_dot[k] = u(rng);
    x.body.position = Vec3(u(rng), u(rng), u(rng));
    x.body.rotation = RotationMatrix(rotation_exp(Vec3(u(rng), u(rng), u(rng))));
    x.body.velocity = Vec3(u(rng), u(rng), u(rng));
    x.body.angular_velocity = Vec3(u(rng), u(rng), u(rng));
    auto at = [&](double t) {
      BodyState b = x.body;
      b.position += t * x.body.velocity;
      b.rotation = RotationMatrix(x.body.rotation.matrix() * rotation_exp(t * x.body.angular_velocity));
      LegJointState l = x.legs;
      l.q += t * x.legs.q_dot;
      return std::pair(b, l);
    };
    constexpr double h = 1e-6;
    for (int i = 0; i < kNumLegs; ++i) {
      const auto [bp, lp] = at(h);
      const auto [bm, lm] = at(-h);
      const Vec3 fd = (foot_position(bp, lp, i, body) - foot_position(bm, lm, i, body)) / (2.0 * h);
      const Vec3 v = foot_velocity(x.body, x.legs, i, body);
      worst = std::max(worst, (v - fd).norm() / std::max(1.0, v.norm()));
    }
  }
  return {"kinematics", worst < 1e-6, "max rel error " + fmt(worst)};
}

CheckResult check_energy(const ScenarioConfig& config) {
  HromState x;
  for (int i = 0; i < kNumLegs; ++i) x.legs.set_leg(i, 0.0, 0.0, config.body.leg_length_min);
  x.body.position = Vec3(0.0, 0.0, 1.0);
  x.body.velocity = Vec3(1.0, 0.0, 2.0);
  x.body.angular_velocity = Vec3(1.0, 2.0, 0.5);
  RolloutOptions options;
  options.dt = config.simulation.dt;
  options.duration = std::max(1, static_cast<int>(std::lround(1.0 / options.dt))) * options.dt;
  options.integrator = integrator_of(config);
  options.contact_mode = ContactMode::kPlanned;
  const double tol = options.integrator == Integrator::kRk4 ? 1e-6 : 1e-2;
  try {
    const Trajectory traj = rollout(x, InputSchedule::constant(InputVector{}), options, config.body,
                                    config.contact, Terrain(0.0));
    const double drift = energy_drift(traj);
    return {"energy_drift", drift <= tol, "relative drift " + fmt(drift) + " (limit " + fmt(tol) + ")"};
  } catch (const std::exception& e) {
    return {"energy_drift", false, e.what()};
  }
}

CheckResult check_stribeck(const ScenarioConfig& config) {
  const ContactParams& c = config.contact;
  bool ok = stribeck_coefficient(0.0, c) == c.mu_s;
  ok = ok && std::abs(stribeck_coefficient(100.0 * c.v_s, c) - c.mu_c) <= 1e-12;
  double prev = stribeck_coefficient(0.0, c);
  const double increasing = c.mu_c >= c.mu_s ? 1.0 : -1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double s = stribeck_coefficient(k * 0.1 * c.v_s, c);
    ok = ok && increasing * (s - prev) >= 0.0;
    prev = s;
  }
  return {"stribeck", ok, "s(0)=" + fmt(stribeck_coefficient(0.0, c))};
}

CheckResult check_contact_statics(const ScenarioConfig& config) {
  const BodyParams& body = config.body;
  HromState x;
  constexpr double stand = 0.3;
  constexpr double drop = 0.05;
  x.body.position = Vec3(0.0, 0.0, stand + drop);
  for (int i = 0; i < kNumLegs; ++i) x.legs.set_leg(i, 0.0, 0.0, stand + body.hip_offsets[i].z());
  RolloutOptions options;
  options.dt = 1e-4;
  options.duration = 2.0;
  try {
    const Trajectory traj =
        rollout(x, InputSchedule::constant(InputVector{}), options, body, config.contact, Terrain(0.0));
    double fz = 0.0;
    for (const Vec3& f : traj.grf_log.back()) fz += f.z();
    const double weight = body.mass * body.gravity.norm();
    const double err = std::abs(fz - weight) / weight;
    return {"contact_statics", err <= 0.01, "sum GRF_z " + fmt(fz) + " N vs weight " + fmt(weight)};
  } catch (const std::exception& e) {
    return {"contact_statics", false, e.what()};
  }
}

CheckResult check_standing_cone(const ScenarioConfig& config) {
  const Terrain terrain(config.simulation.slope_deg * kDegToRad);
  ScenarioConfig standing = config;
  standing.simulation.initial.mode = "standing";
  standing.simulation.initial.velocity.setZero();
  standing.simulation.initial.angular_velocity.setZero();
  RolloutOptions options;
  options.dt = config.simulation.dt;
  options.duration = std::max(1, static_cast<int>(std::lround(0.5 / options.dt))) * options.dt;
  options.integrator = integrator_of(config);
  options.cone_mu = config.cone_mu;
  InputSchedule schedule = InputSchedule::constant(InputVector{});
  schedule.stance.push_back({true, true, true, true});
  try {
    const Trajectory traj = rollout(initial_state(standing, terrain), schedule, options, config.body,
                                    config.contact, terrain);
    return {"standing_cone", traj.cone_violations == 0,
            std::to_string(traj.cone_violations) + " violations"};
  } catch (const std::exception& e) {
    return {"standing_cone", false, e.what()};
  }
}

CheckResult check_cone_margin(const ScenarioConfig& config) {
  const double mu = config.cone_mu;
  const double inside = friction_cone_margin(Vec3(0.3, 0.4, 1.0), mu);
  bool ok = std::abs(inside - (mu - 0.5)) <= 1e-12;
  ok = ok && friction_cone_margin(Vec3(1.0, 0.0, 0.0), mu) == kConeViolation;
  ok = ok && friction_cone_margin(Vec3(0.0, 0.0, 2.0), mu) == 2.0 * mu;
  return {"cone_margin", ok, "margin " + fmt(inside)};
}

CheckResult check_hermite() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    VectorXd xj(5), xj1(5), fj(5), fj1(5);
    for (VectorXd* v : {&xj, &xj1, &fj, &fj1}) {
      for (int i = 0; i < 5; ++i) (*v)[i] = u(rng);
    }
    const double h = 0.05 + std::abs(u(rng));
    const HermiteCoefficients c = hermite_coefficients(xj, xj1, fj, fj1, h);
    worst = std::max(worst, (c.value(0.0) - xj).cwiseAbs().maxCoeff());
    worst = std::max(worst, (c.value(1.0) - xj1).cwiseAbs().maxCoeff());
    worst = std::max(worst, (c.slope(0.0) / h - fj).cwiseAbs().maxCoeff());
    worst = std::max(worst, (c.slope(1.0) / h - fj1).cwiseAbs().maxCoeff());
  }
  return {"hermite", worst <= 1e-12, "max error " + fmt(worst)};
}

CheckResult check_cost_gradient() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Transcription tr = Transcription::uniform(5, 1.0, 3, 2);
  ReferenceTrajectory refs;
  CostWeights w{VectorXd::Constant(3, 2.0), VectorXd::Constant(2, 0.5)};
  for (int k = 0; k < tr.knots(); ++k) {
    tr.states[k] = VectorXd::NullaryExpr(3, [&] { return u(rng); });
    tr.inputs[k] = VectorXd::NullaryExpr(2, [&] { return u(rng); });
    refs.states.push_back(VectorXd::NullaryExpr(3, [&] { return u(rng); }));
  }
  const VectorXd y = tr.to_decision_vector();
  const VectorXd g = cost_gradient(tr, refs, w);
  const VectorXd fd =
      nlp::fd_gradient([&](const VectorXd& z) { return cost(tr.with_decision_vector(z), refs, w); }, y);
  const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
  return {"cost_gradient", err <= 1e-6, "rel error " + fmt(err)};
}

CheckResult check_solver() {
  // min (y0 - 1)^2 + (y1 - 2)^2  s.t.  y0 + y1 = 1, y0 >= 0  ->  y = (0, 1).
  nlp::NlpProblem p;
  p.dimension = 2;
  p.cost = [](const VectorXd& y) { return std::pow(y[0] - 1.0, 2) + std::pow(y[1] - 2.0, 2); };
  p.equalities = [](const VectorXd& y) { return VectorXd::Constant(1, y[0] + y[1] - 1.0); };
  p.inequalities = [](const VectorXd& y) { return VectorXd::Constant(1, y[0]); };
  p.cost_gradient = [](const VectorXd& y) { return Eigen::Vector2d(2 * (y[0] - 1.0), 2 * (y[1] - 2.0)).eval(); };
  p.equality_jacobian = [](const VectorXd&) { return nlp::SparseMatrix(Eigen::RowVector2d(1, 1).sparseView()); };
  p.inequality_jacobian = [](const VectorXd&) { return nlp::SparseMatrix(Eigen::RowVector2d(1, 0).sparseView()); };
  p.initial_guess = VectorXd::Zero(2);
  nlp::SolveOptions options;
  options.tol_optimality = 1e-9;
  options.tol_eq = options.tol_ineq = 1e-9;
  const nlp::SolveResult r = nlp::solve(p, options);
  const double err = (r.solution - Eigen::Vector2d(0.0, 1.0)).cwiseAbs().maxCoeff();
  return {"solver_kkt", r.report.status == nlp::SolveStatus::kConverged && err <= 1e-5,
          "error " + fmt(err)};
}

}  // namespace

std::vector<CheckResult> run_checks(const ScenarioConfig& config) {
  return {check_kinematics(config),      check_energy(config),        check_stribeck(config),
          check_contact_statics(config), check_standing_cone(config), check_cone_margin(config),
          check_hermite(),               check_cost_gradient(),       check_solver()};
}

int cmd_check(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  try {
    config = load(args);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    out << std::left << std::setw(18) << "config" << "FAIL  " << e.what() << "\n";
    return kExitConfig;
  }
  bool all = true;
  for (const CheckResult& c : run_checks(config)) {
    out << std::left << std::setw(18) << c.name << (c.pass ? "PASS  " : "FAIL  ") << c.detail << "\n";
    all = all && c.pass;
  }
  return all ? kExitOk : kExitCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thruster-assisted quadruped reduced-order model: simulation and slope planning"};
  app.require_subcommand(1);
  CommonArgs args;
  std::optional<std::string> schedule;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config, "Scenario config (JSON)")->required();
    cmd->add_option("--out", args.out, "Output directory (overrides config)");
    cmd->add_option("--slopes", args.slopes, "Comma-separated slopes in degrees (overrides config)");
    cmd->add_option("--seed", args.seed, "Reserved; runs are deterministic");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Roll out an input schedule");
  add_common(simulate);
  simulate->add_option("--schedule", schedule, "Input schedule (JSON); zero inputs if omitted");
  CLI::App* optimize = app.add_subcommand("optimize", "Plan and validate the slope sweep");
  add_common(optimize);
  CLI::App* check = app.add_subcommand("check", "Run the invariant checks");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  if (*simulate) return cmd_simulate(args, schedule, out, err);
  if (*optimize) return cmd_optimize(args, out, err);
  return cmd_check(args, out, err);
}

}  // namespace wair::cli
