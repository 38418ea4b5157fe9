#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "wair/contact.hpp"
#include "wair/hrom.hpp"

namespace wair {

/// Raised when a step produces a non-finite state. what() carries the
/// offending state.
class SimulationAbort : public std::runtime_error {
 public:
  SimulationAbort(const std::string& message, long step = -1)
      : std::runtime_error(message), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

using StanceFlags = std::array<bool, kNumLegs>;

/// Piecewise-linear input schedule. Inputs are held constant outside the
/// sampled range; stance flags (optional) are held from the last sample.
struct InputSchedule {
  std::vector<double> times;
  std::vector<InputVector> inputs;
  std::vector<StanceFlags> stance;  // empty or same length as times

  static InputSchedule constant(const InputVector& u);
  InputVector at(double t) const;
  bool has_stance() const { return !stance.empty(); }
  StanceFlags stance_at(double t) const;
  /// Throws std::invalid_argument on inconsistent lengths or unsorted times.
  void validate() const;
};

enum class Integrator { kEuler, kRk4 };

enum class ContactMode {
  kContactLaw,  // contact-law forces replace scheduled GRFs for feet below the surface
  kPlanned,     // GRFs are taken from the schedule verbatim
};

struct RolloutOptions {
  double dt = 1e-3;
  double duration = 1.0;
  Integrator integrator = Integrator::kEuler;
  ContactMode contact_mode = ContactMode::kContactLaw;
  double cone_mu = 0.7;
};

struct ContactEvent {
  enum class Kind { kTouchdown, kLiftoff };
  double time = 0.0;
  int leg = 0;
  Kind kind = Kind::kTouchdown;
  bool unplanned = false;  // touchdown of a foot the schedule flags as swing
};

struct Trajectory {
  std::vector<double> times;
  std::vector<HromState> states;
  std::vector<InputVector> inputs;  // applied during [t_k, t_k+1); one fewer than states
  InputVector final_input;          // inputs evaluated at the last state
  std::vector<std::array<Vec3, kNumLegs>> grf_log;  // world frame, one per state
  std::vector<Energies> energy_log;
  std::vector<ContactEvent> events;
  long cone_violations = 0;
  double min_cone_margin = 0.0;  // over feet carrying load
};

HromState euler_step(const HromState& x, const InputVector& u, double dt, const BodyParams& params);
HromState rk4_step(const HromState& x, const InputVector& u, double dt, const BodyParams& params);

Trajectory rollout(const HromState& x0, const InputSchedule& schedule, const RolloutOptions& options,
                   const BodyParams& params, const ContactParams& contact, const Terrain& terrain);

}  // namespace wair
