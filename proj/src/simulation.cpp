#include "wair/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wair {

InputSchedule InputSchedule::constant(const InputVector& u) {
  InputSchedule s;
  s.times = {0.0};
  s.inputs = {u};
  return s;
}

void InputSchedule::validate() const {
  if (times.empty() || times.size() != inputs.size()) {
    throw std::invalid_argument("InputSchedule: times and inputs must be non-empty and equal length");
  }
  if (!stance.empty() && stance.size() != times.size()) {
    throw std::invalid_argument("InputSchedule: stance flags must match times");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw std::invalid_argument("InputSchedule: times must be strictly increasing");
    }
  }
}

namespace {

// Index k with times[k] <= t < times[k+1], clamped to the valid range.
std::size_t segment_index(const std::vector<double>& times, double t) {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

}  // namespace

InputVector InputSchedule::at(double t) const {
  if (times.size() == 1 || t <= times.front()) return inputs.front();
  if (t >= times.back()) return inputs.back();
  const std::size_t k = segment_index(times, t);
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  const InputFlat u = inputs[k].flatten() + w * (inputs[k + 1].flatten() - inputs[k].flatten());
  return InputVector::unflatten(u);
}

StanceFlags InputSchedule::stance_at(double t) const {
  if (stance.empty()) return {true, true, true, true};
  return stance[segment_index(times, t)];
}

namespace {

std::string dump_state(const StateVector& x) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

HromState finish_step(const StateVector& next, const char* name) {
  if (!next.allFinite()) {
    throw SimulationAbort(std::string(name) + ": non-finite state " + dump_state(next));
  }
  try {
    return HromState::unflatten_projected(next);
  } catch (const std::invalid_argument&) {
    throw SimulationAbort(std::string(name) + ": rotation block degenerate " + dump_state(next));
  }
}

}  // namespace

HromState euler_step(const HromState& x, const InputVector& u, double dt, const BodyParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  const StateVector x0 = x.flatten();
  return finish_step(x0 + dt * state_derivative(x0, u, params), "euler_step");
}

HromState rk4_step(const HromState& x, const InputVector& u, double dt, const BodyParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const StateVector x0 = x.flatten();
  const StateVector k1 = state_derivative(x0, u, params);
  const StateVector k2 = state_derivative(x0 + 0.5 * dt * k1, u, params);
  const StateVector k3 = state_derivative(x0 + 0.5 * dt * k2, u, params);
  const StateVector k4 = state_derivative(x0 + dt * k3, u, params);
  return finish_step(x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), "rk4_step");
}

namespace {

struct StepInput {
  InputVector input;
  std::array<bool, kNumLegs> penetrating{};
};

StepInput close_contact(const HromState& x, double t, const InputSchedule& schedule,
                        const RolloutOptions& options, const BodyParams& params,
                        const ContactParams& contact, const Terrain& terrain) {
  StepInput out;
  out.input = schedule.at(t);
  if (options.contact_mode == ContactMode::kPlanned) {
    for (int i = 0; i < kNumLegs; ++i) out.penetrating[i] = !out.input.grf[i].isZero(0.0);
    return out;
  }
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 p = terrain.to_terrain(foot_position(x.body, x.legs, i, params));
    if (p.z() > 0.0) continue;
    const Vec3 v = terrain.to_terrain(foot_velocity(x.body, x.legs, i, params));
    out.input.grf[i] = terrain.to_world(ground_force(p, v, contact));
    out.penetrating[i] = true;
  }
  return out;
}

}  // namespace

Trajectory rollout(const HromState& x0, const InputSchedule& schedule, const RolloutOptions& options,
                   const BodyParams& params, const ContactParams& contact, const Terrain& terrain) {
  schedule.validate();
  if (!(options.dt > 0.0) || !(options.duration > 0.0)) {
    throw std::invalid_argument("rollout: dt and duration must be positive");
  }
  const double ratio = options.duration / options.dt;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw std::invalid_argument("rollout: duration must be an integer multiple of dt");
  }

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps);
  traj.min_cone_margin = std::numeric_limits<double>::infinity();

  std::array<bool, kNumLegs> was_loaded{};
  auto record = [&](const HromState& x, double t, const StepInput& in, bool first) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.energy_log.push_back(energies(x, params));
    std::array<Vec3, kNumLegs> grf;
    const StanceFlags planned = schedule.stance_at(t);
    for (int i = 0; i < kNumLegs; ++i) {
      grf[i] = in.input.grf[i];
      const bool loaded = in.penetrating[i];
      if (!first && loaded != was_loaded[i]) {
        ContactEvent e;
        e.time = t;
        e.leg = i;
        e.kind = loaded ? ContactEvent::Kind::kTouchdown : ContactEvent::Kind::kLiftoff;
        e.unplanned = loaded && schedule.has_stance() && !planned[i];
        traj.events.push_back(e);
      }
      was_loaded[i] = loaded;
      if (!grf[i].isZero(0.0)) {
        const double margin = friction_cone_margin(terrain.to_terrain(grf[i]), options.cone_mu);
        traj.min_cone_margin = std::min(traj.min_cone_margin, margin);
        if (margin < -1e-9) ++traj.cone_violations;
      }
    }
    traj.grf_log.push_back(grf);
  };

  HromState x = x0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    const StepInput in = close_contact(x, t, schedule, options, params, contact, terrain);
    record(x, t, in, k == 0);
    traj.inputs.push_back(in.input);
    try {
      x = options.integrator == Integrator::kRk4 ? rk4_step(x, in.input, options.dt, params)
                                                 : euler_step(x, in.input, options.dt, params);
    } catch (const SimulationAbort& e) {
      throw SimulationAbort(std::string(e.what()) + " at step " + std::to_string(k), k);
    }
  }
  const double t_end = static_cast<double>(steps) * options.dt;
  const StepInput last = close_contact(x, t_end, schedule, options, params, contact, terrain);
  record(x, t_end, last, steps == 0);
  traj.final_input = last.input;
  if (!std::isfinite(traj.min_cone_margin)) traj.min_cone_margin = 0.0;
  return traj;
}

}  // namespace wair
