#pragma once

// Binds the HROM to the generic collocation machinery: planning dynamics,
// per-knot inequality rows and the assembled NLP.

#include <array>
#include <vector>

#include "wair/collocation.hpp"
#include "wair/contact.hpp"
#include "wair/hrom.hpp"
#include "wair/nlp.hpp"
#include "wair/simulation.hpp"

namespace wair {

/// Planned GRFs are decision variables expressed in the terrain frame; the
/// thruster force stays in the world frame.
InputVector planning_input_to_world(const VectorXd& u, const Terrain& terrain);
VectorXd world_input_to_planning(const InputVector& u, const Terrain& terrain);

/// f_ROM with terrain-frame GRF inputs.
DynamicsFn planning_dynamics(const BodyParams& body, const Terrain& terrain);

struct InequalitySettings {
  double mu = 0.7;
  Vec3 thrust_max = Vec3(10.0, 10.0, 40.0);  // per-axis magnitude bound, world frame
  BodyParams body;
  Terrain terrain;
  std::vector<StanceFlags> stance;  // one entry per knot
};

/// Rows for one knot, all feasible when >= 0, in this order:
///   thrust: max_a - u_T,a and max_a + u_T,a for a = x, y, z
///   leg lengths: r_i - r_min and r_max - r_i for each leg
///   per leg: stance -> [mu F_n - |F_t|, F_n]; swing -> [foot height above surface]
VectorXd knot_inequalities(const VectorXd& x, const VectorXd& u, const StanceFlags& stance,
                           const InequalitySettings& settings);

/// knot_inequalities() stacked over all knots.
VectorXd inequality_constraints(const Transcription& tr, const InequalitySettings& settings);
SparseMatrix inequality_jacobian(const Transcription& tr, const InequalitySettings& settings,
                                 double fd_step = 1e-6);

/// Everything needed to pose the planning NLP.
struct CollocationProblem {
  Transcription guess;
  ReferenceTrajectory refs;
  CostWeights weights;
  VectorXd start;
  GoalSpec goal;
  InequalitySettings inequalities;
  double final_time_min = 0.0;  // used only for free final time
  double final_time_max = 0.0;
  double fd_step = 1e-6;
  /// Adds u_N - u_{N-1} = 0. The cost leaves u_N unweighted.
  bool hold_final_input = false;
};

/// Box bounds pin swing-foot GRFs to zero and t_f to its value unless free.
nlp::NlpProblem make_nlp(const CollocationProblem& problem);

/// Equalities of the planning NLP: [defects; boundary residuals; final-input hold].
VectorXd planning_equalities(const Transcription& tr, const CollocationProblem& problem);

}  // namespace wair
