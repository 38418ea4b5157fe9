#include "wair/wair.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wair {

namespace si = state_index;
namespace ii = input_index;

GaitSchedule::GaitSchedule(double stride_period) : period_(stride_period) {
  if (!(stride_period > 0.0) || !std::isfinite(stride_period)) {
    throw std::invalid_argument("GaitSchedule: stride period must be positive");
  }
}

long GaitSchedule::phase_index(double t) const {
  const long n = static_cast<long>(std::ceil(t / half_period() - 1e-9)) - 1;
  return std::max(n, 0L);
}

int GaitSchedule::pair_of(int leg) {
  if (leg < 0 || leg >= kNumLegs) throw std::out_of_range("GaitSchedule: leg index");
  return (leg == 0 || leg == 3) ? 0 : 1;
}

bool GaitSchedule::in_stance(int leg, double t) const {
  const long n = phase_index(t);
  const long parity = ((n % 2) + 2) % 2;
  return parity == pair_of(leg);
}

StanceFlags GaitSchedule::stance_at(double t) const {
  StanceFlags flags{};
  for (int i = 0; i < kNumLegs; ++i) flags[i] = in_stance(i, t);
  return flags;
}

Vec3 leg_inverse_kinematics(const Vec3& l) {
  const double r = l.norm();
  if (!(r > 0.0)) throw std::invalid_argument("leg_inverse_kinematics: zero-length leg");
  const double gamma = std::asin(std::clamp(l.y() / r, -1.0, 1.0));
  const double phi = std::atan2(-l.x(), -l.z());
  return Vec3(phi, gamma, r);
}

ReferenceClimb::ReferenceClimb(const Terrain& terrain, const GaitSchedule& gait,
                               const GaitSettings& settings, const BodyParams& body,
                               double start_displacement)
    : terrain_(terrain), gait_(gait), settings_(settings), body_(body), start_(start_displacement) {}

double ReferenceClimb::speed() const { return settings_.stride_length / gait_.stride_period(); }

double ReferenceClimb::displacement(double t) const { return start_ + speed() * t; }

Vec3 ReferenceClimb::foot_terrain(int leg, double t) const {
  const double half = gait_.half_period();
  const long n = gait_.phase_index(t);
  const Vec3& hip = body_.hip_offsets[leg];
  if (gait_.in_stance(leg, t)) {
    return Vec3(hip.x() + displacement((n + 0.5) * half), hip.y(), 0.0);
  }
  const double s = std::clamp((t - n * half) / half, 0.0, 1.0);
  const double x0 = hip.x() + displacement((n - 0.5) * half);
  const double x1 = hip.x() + displacement((n + 1.5) * half);
  const double blend = 0.5 * (1.0 - std::cos(std::numbers::pi * s));
  return Vec3(x0 + (x1 - x0) * blend, hip.y(), settings_.swing_height * std::sin(std::numbers::pi * s));
}

Vector12 ReferenceClimb::leg_coordinates(double t) const {
  const Vec3 body(displacement(t), 0.0, settings_.body_height);
  Vector12 q;
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 l = foot_terrain(i, t) - body - body_.hip_offsets[i];
    q.segment<3>(3 * i) = leg_inverse_kinematics(l);
  }
  return q;
}

StateVector ReferenceClimb::state(double t) const {
  constexpr double h = 1e-6;
  StateVector x = StateVector::Zero();
  x.segment<kLegDofs>(si::kLegPosition) = leg_coordinates(t);
  x.segment<kLegDofs>(si::kLegVelocity) = (leg_coordinates(t + h) - leg_coordinates(t - h)) / (2.0 * h);
  const Mat3 R = terrain_.surface_to_world().matrix();
  x.segment<9>(si::kRotation) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R.data());
  x.segment<3>(si::kPosition) = terrain_.to_world(Vec3(displacement(t), 0.0, settings_.body_height));
  x.segment<3>(si::kVelocity) = terrain_.up_slope() * speed();
  return x;
}

Vector12 ReferenceClimb::joint_accel(double t) const {
  constexpr double h = 1e-4;
  return (leg_coordinates(t + h) - 2.0 * leg_coordinates(t) + leg_coordinates(t - h)) / (h * h);
}

namespace {

CostWeights make_weights(const CostWeightSettings& w) {
  CostWeights out;
  out.state = VectorXd::Zero(kStateDim);
  for (int i = 0; i < kNumLegs; ++i) {
    out.state.segment<3>(si::kLegPosition + 3 * i) << w.leg_angle, w.leg_angle, w.leg_length;
    out.state.segment<3>(si::kLegVelocity + 3 * i).setConstant(w.leg_rate);
  }
  out.state.segment<9>(si::kRotation).setConstant(w.rotation);
  out.state.segment<3>(si::kPosition).setConstant(w.position);
  out.state.segment<3>(si::kAngularVelocity).setConstant(w.angular_velocity);
  out.state.segment<3>(si::kVelocity).setConstant(w.velocity);

  out.input = VectorXd::Zero(kInputDim);
  out.input.segment<kLegDofs>(ii::kJointAccel).setConstant(w.joint_accel);
  for (int i = 0; i < kNumLegs; ++i) {
    out.input.segment<3>(ii::kGrf + 3 * i) << w.grf_tangential, w.grf_tangential, w.grf_normal;
  }
  out.input.segment<3>(ii::kThrust).setConstant(w.thrust);
  return out;
}

/// Quasi-static support split between the stance feet, capped inside the
/// cone, with the thruster covering the rest.
VectorXd static_input_guess(const Vector12& joint_accel, const StanceFlags& stance,
                            const WairInstance& inst, const Vec3& thrust_max) {
  VectorXd u = VectorXd::Zero(kInputDim);
  u.segment<kLegDofs>(ii::kJointAccel) = joint_accel;
  const Vec3 support = -inst.body.mass * inst.terrain.to_terrain(inst.body.gravity);
  const int n = static_cast<int>(std::count(stance.begin(), stance.end(), true));
  Vec3 legs_total = Vec3::Zero();
  if (n > 0) {
    const double normal = std::max(support.z(), 0.0) / n;
    const double cap = 0.8 * inst.cone_mu * normal;
    const Vec3 per_leg(std::clamp(support.x() / n, -cap, cap), 0.0, normal);
    for (int i = 0; i < kNumLegs; ++i) {
      if (!stance[i]) continue;
      u.segment<3>(ii::kGrf + 3 * i) = per_leg;
      legs_total += per_leg;
    }
  }
  const Vec3 thrust = inst.terrain.to_world(support - legs_total);
  for (int a = 0; a < 3; ++a) {
    const double cap = 0.9 * thrust_max[a];
    u[ii::kThrust + a] = std::clamp(thrust[a], -cap, cap);
  }
  return u;
}

}  // namespace

WairInstance build_instance(double slope, const ScenarioConfig& config, int stride_index) {
  config.validate();
  if (stride_index < 0) throw std::invalid_argument("build_instance: negative stride index");

  WairInstance inst;
  inst.slope = slope;
  inst.terrain = Terrain(slope);
  inst.gait = GaitSchedule(config.gait.stride_period);
  inst.gait_settings = config.gait;
  inst.body = config.body;
  inst.contact = config.contact;
  inst.cone_mu = config.cone_mu;
  inst.solver = config.solver;
  inst.simulation = config.simulation;
  inst.start_displacement = stride_index * config.gait.stride_length;
  inst.goal_displacement = config.gait.strides * config.gait.stride_length;

  const ReferenceClimb ref(inst.terrain, inst.gait, config.gait, inst.body, inst.start_displacement);
  const double tf = config.gait.strides * config.gait.stride_period;
  const TranscriptionSettings& ts = config.transcription;

  Transcription tr = Transcription::uniform(ts.knots, tf, kStateDim, kInputDim);
  tr.free_final_time = ts.free_final_time;
  inst.knot_stance.resize(ts.knots);
  for (int k = 0; k < ts.knots; ++k) {
    const double t = tr.knot_times[k];
    inst.knot_stance[k] = inst.gait.stance_at(t);
    tr.states[k] = ref.state(t);
    tr.inputs[k] = static_input_guess(ref.joint_accel(t), inst.knot_stance[k], inst, config.thrust_max);
  }
  tr.inputs.back() = tr.inputs[ts.knots - 2];

  CollocationProblem& p = inst.problem;
  p.guess = tr;
  p.refs.states = tr.states;
  p.weights = make_weights(ts.weights);
  p.start = tr.states.front();
  p.goal.target = ref.state(tf);
  for (int base : {si::kPosition, si::kAngularVelocity, si::kVelocity}) {
    for (int a = 0; a < 3; ++a) p.goal.components.push_back(base + a);
  }
  p.inequalities.mu = config.cone_mu;
  p.inequalities.thrust_max = config.thrust_max;
  p.inequalities.body = inst.body;
  p.inequalities.terrain = inst.terrain;
  p.inequalities.stance = inst.knot_stance;
  p.final_time_min = 0.5 * tf;
  p.final_time_max = 2.0 * tf;
  p.fd_step = ts.fd_step;
  p.hold_final_input = true;
  return inst;
}

WarmStart warm_start(const Transcription& plan, const nlp::Multipliers& multipliers,
                     const WairInstance& from, const WairInstance& to) {
  const Transcription& skeleton = to.problem.guess;
  if (plan.knots() != skeleton.knots() || plan.state_dim() != skeleton.state_dim() ||
      plan.input_dim() != skeleton.input_dim()) {
    throw std::invalid_argument("warm_start: transcription shapes differ");
  }
  WarmStart out{plan, multipliers};
  if (from.slope == to.slope && from.problem.start == to.problem.start &&
      from.problem.guess.knot_times == skeleton.knot_times) {
    return out;
  }

  const Mat3 delta =
      to.terrain.surface_to_world().matrix() * from.terrain.surface_to_world().matrix().transpose();
  const Vec3 p_from = from.problem.start.segment<3>(si::kPosition);
  const Vec3 p_to = to.problem.start.segment<3>(si::kPosition);
  Transcription& guess = out.guess;
  for (int k = 0; k < guess.knots(); ++k) {
    VectorXd& x = guess.states[k];
    Eigen::Map<Mat3> R(x.data() + si::kRotation);
    R = (delta * R).eval();
    x.segment<3>(si::kPosition) = delta * (x.segment<3>(si::kPosition) - p_from) + p_to;
    x.segment<3>(si::kVelocity) = delta * x.segment<3>(si::kVelocity);
    VectorXd& u = guess.inputs[k];
    u.segment<3>(ii::kThrust) = delta * u.segment<3>(ii::kThrust);
  }
  if (!skeleton.free_final_time) guess.knot_times = skeleton.knot_times;
  guess.states.front() = to.problem.start;
  return out;
}

PlanResult plan(const WairInstance& instance, const std::optional<WarmStart>& warm) {
  CollocationProblem problem = instance.problem;
  std::optional<nlp::Multipliers> multipliers;
  if (warm) {
    problem.guess = warm->guess;
    multipliers = warm->multipliers;
  }
  const nlp::NlpProblem nlp_problem = make_nlp(problem);
  nlp::SolveResult solved = nlp::solve(nlp_problem, instance.solver, multipliers);
  PlanResult out;
  out.plan = problem.guess.with_decision_vector(solved.solution);
  out.report = std::move(solved.report);
  out.multipliers = std::move(solved.multipliers);
  return out;
}

InputSchedule replay_schedule(const Transcription& plan, const WairInstance& instance) {
  InputSchedule schedule;
  schedule.times = plan.knot_times;
  for (int k = 0; k < plan.knots(); ++k) {
    schedule.inputs.push_back(planning_input_to_world(plan.inputs[k], instance.terrain));
    schedule.stance.push_back(instance.knot_stance[k]);
  }
  return schedule;
}

namespace {

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vec3 grf_sum(const std::array<Vec3, kNumLegs>& grf) {
  Vec3 s = Vec3::Zero();
  for (const Vec3& f : grf) s += f;
  return s;
}

void replay(const Transcription& tr, const WairInstance& instance, ValidationResult& out) {
  const double dt = instance.simulation.dt;
  RolloutOptions options;
  options.dt = dt;
  options.duration = std::floor(tr.final_time() / dt + 1e-9) * dt;
  options.integrator =
      instance.simulation.integrator == "rk4" ? Integrator::kRk4 : Integrator::kEuler;
  options.contact_mode = ContactMode::kContactLaw;
  options.cone_mu = instance.cone_mu;
  const InputSchedule planned = replay_schedule(tr, instance);
  InputSchedule schedule = planned;
  for (InputVector& u : schedule.inputs) {
    for (Vec3& f : u.grf) f.setZero();
  }
  try {
    out.replay = rollout(HromState::unflatten_projected(StateVector(tr.states.front())), schedule,
                         options, instance.body, instance.contact, instance.terrain);
  } catch (const SimulationAbort& e) {
    std::ostringstream msg;
    msg << "replay aborted at step " << e.step() << ": " << e.what();
    out.metrics.replay_error = msg.str();
    out.metrics.replay_diverged = true;
    return;
  }

  double peak = 0.0;
  double error = 0.0;
  for (size_t i = 0; i < out.replay.times.size(); ++i) {
    const Vec3 plan_sum = grf_sum(planned.at(out.replay.times[i]).grf);
    peak = std::max(peak, plan_sum.norm());
    error = std::max(error, (grf_sum(out.replay.grf_log[i]) - plan_sum).norm());
  }
  out.metrics.replay_grf_divergence = peak > 0.0 ? error / peak : error;
  out.metrics.replay_diverged = out.metrics.replay_grf_divergence > 0.2;
}

}  // namespace

ValidationResult validate(const PlanResult& result, const WairInstance& instance) {
  const Transcription& tr = result.plan;
  if (tr.knots() != static_cast<int>(instance.knot_stance.size())) {
    throw std::invalid_argument("validate: plan does not belong to this instance");
  }
  ValidationResult out;
  WairMetrics& m = out.metrics;
  m.slope_deg = instance.slope / kDegToRad;
  m.status = nlp::to_string(result.report.status);
  m.outer_iterations = result.report.outer_iterations;
  m.inner_iterations = result.report.inner_iterations;
  m.final_cost = result.report.final_cost;

  const DynamicsFn f = planning_dynamics(instance.body, instance.terrain);
  m.max_defect = inf_norm(collocation_defects(tr, f));
  m.max_boundary_residual = inf_norm(boundary_residuals(tr, instance.problem.start, instance.problem.goal));

  constexpr double inf = std::numeric_limits<double>::infinity();
  m.min_cone_margin = inf;
  m.min_swing_clearance = inf;
  for (int k = 0; k < tr.knots(); ++k) {
    const StateVector x(tr.states[k]);
    const VectorXd& u = tr.inputs[k];
    m.peak_joint_accel = std::max(m.peak_joint_accel, inf_norm(u.segment<kLegDofs>(ii::kJointAccel)));
    for (int i = 0; i < kNumLegs; ++i) {
      if (instance.knot_stance[k][i]) {
        const Vec3 grf = u.segment<3>(ii::kGrf + 3 * i);
        m.peak_stance_grf = std::max(m.peak_stance_grf, grf.norm());
        m.min_cone_margin = std::min(m.min_cone_margin, friction_cone_margin(grf, instance.cone_mu));
      } else {
        m.min_swing_clearance =
            std::min(m.min_swing_clearance, instance.terrain.height(foot_position(x, i, instance.body)));
      }
    }
    if (k + 1 < tr.knots()) {
      const double a = tr.inputs[k].segment<3>(ii::kThrust).norm();
      const double b = tr.inputs[k + 1].segment<3>(ii::kThrust).norm();
      m.thruster_impulse += 0.5 * tr.interval(k) * (a + b);
    }
  }
  const Vec3 travel = tr.states.back().segment<3>(si::kPosition) - tr.states.front().segment<3>(si::kPosition);
  m.climb_distance = instance.terrain.up_slope().dot(travel);

  replay(tr, instance, out);
  return out;
}

std::vector<SlopeRun> slope_sweep(const ScenarioConfig& config) {
  std::vector<SlopeRun> runs;
  const SlopeRun* last_converged = nullptr;
  std::size_t last_index = 0;
  for (double deg : config.slopes_deg) {
    SlopeRun run;
    run.metrics.slope_deg = deg;
    try {
      run.instance = build_instance(deg * kDegToRad, config);
      std::optional<WarmStart> warm;
      if (last_converged) {
        warm = warm_start(last_converged->result->plan, last_converged->result->multipliers,
                          last_converged->instance, run.instance);
      }
      run.result = plan(run.instance, warm);
      run.validation = validate(*run.result, run.instance);
      run.metrics = run.validation->metrics;
      run.metrics.slope_deg = deg;
    } catch (const std::exception& e) {
      run.error = e.what();
      run.metrics.status = "error";
    }
    runs.push_back(std::move(run));
    if (runs.back().result && runs.back().result->converged()) last_index = runs.size();
    last_converged = last_index ? &runs[last_index - 1] : nullptr;
  }
  return runs;
}

}  // namespace wair
