#include "wair/hrom_transcription.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace wair {

namespace ii = input_index;
namespace si = state_index;

InputVector planning_input_to_world(const VectorXd& u, const Terrain& terrain) {
  InputVector out = InputVector::unflatten(u);
  for (Vec3& f : out.grf) f = terrain.to_world(f);
  return out;
}

VectorXd world_input_to_planning(const InputVector& u, const Terrain& terrain) {
  InputVector local = u;
  for (Vec3& f : local.grf) f = terrain.to_terrain(f);
  return local.flatten();
}

DynamicsFn planning_dynamics(const BodyParams& body, const Terrain& terrain) {
  return [body, terrain](const VectorXd& x, const VectorXd& u) -> VectorXd {
    return state_derivative(StateVector(x), planning_input_to_world(u, terrain), body);
  };
}

namespace {
int rows_per_knot(const StanceFlags& stance) {
  int rows = 6 + 2 * kNumLegs;
  for (bool s : stance) rows += s ? 2 : 1;
  return rows;
}
}  // namespace

VectorXd knot_inequalities(const VectorXd& x, const VectorXd& u, const StanceFlags& stance,
                           const InequalitySettings& settings) {
  VectorXd g(rows_per_knot(stance));
  int row = 0;
  for (int a = 0; a < 3; ++a) {
    const double thrust = u[ii::kThrust + a];
    g[row++] = settings.thrust_max[a] - thrust;
    g[row++] = settings.thrust_max[a] + thrust;
  }
  for (int i = 0; i < kNumLegs; ++i) {
    const double r = x[si::kLegPosition + 3 * i + 2];
    g[row++] = r - settings.body.leg_length_min;
    g[row++] = settings.body.leg_length_max - r;
  }
  const StateVector state(x);
  for (int i = 0; i < kNumLegs; ++i) {
    if (stance[i]) {
      const Vec3 f = u.segment<3>(ii::kGrf + 3 * i);
      g[row++] = settings.mu * f.z() - std::hypot(f.x(), f.y());
      g[row++] = f.z();
    } else {
      g[row++] = settings.terrain.height(foot_position(state, i, settings.body));
    }
  }
  return g;
}

namespace {
void check_stance(const Transcription& tr, const InequalitySettings& settings) {
  if (static_cast<int>(settings.stance.size()) != tr.knots()) {
    throw std::invalid_argument("inequality_constraints: need one stance entry per knot");
  }
}
}  // namespace

VectorXd inequality_constraints(const Transcription& tr, const InequalitySettings& settings) {
  check_stance(tr, settings);
  int total = 0;
  for (const StanceFlags& s : settings.stance) total += rows_per_knot(s);
  VectorXd g(total);
  int row = 0;
  for (int k = 0; k < tr.knots(); ++k) {
    const VectorXd gk = knot_inequalities(tr.states[k], tr.inputs[k], settings.stance[k], settings);
    g.segment(row, gk.size()) = gk;
    row += static_cast<int>(gk.size());
  }
  return g;
}

SparseMatrix inequality_jacobian(const Transcription& tr, const InequalitySettings& settings,
                                 double fd_step) {
  check_stance(tr, settings);
  const int nx = tr.state_dim();
  const int nu = tr.input_dim();
  std::vector<Eigen::Triplet<double>> triplets;
  int row = 0;
  for (int k = 0; k < tr.knots(); ++k) {
    VectorXd x = tr.states[k];
    VectorXd u = tr.inputs[k];
    const int rows = rows_per_knot(settings.stance[k]);
    for (int c = 0; c < nx + nu; ++c) {
      double& slot = c < nx ? x[c] : u[c - nx];
      const double saved = slot;
      const double step = fd_step * std::max(1.0, std::abs(saved));
      slot = saved + step;
      const VectorXd plus = knot_inequalities(x, u, settings.stance[k], settings);
      slot = saved - step;
      const VectorXd minus = knot_inequalities(x, u, settings.stance[k], settings);
      slot = saved;
      const int col = c < nx ? tr.state_offset(k) + c : tr.input_offset(k) + (c - nx);
      for (int r = 0; r < rows; ++r) {
        const double d = (plus[r] - minus[r]) / (2.0 * step);
        if (d != 0.0) triplets.emplace_back(row + r, col, d);
      }
    }
    row += rows;
  }
  SparseMatrix jac(row, tr.decision_dim());
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

VectorXd planning_equalities(const Transcription& tr, const CollocationProblem& problem) {
  const DynamicsFn f = planning_dynamics(problem.inequalities.body, problem.inequalities.terrain);
  const VectorXd defects = collocation_defects(tr, f);
  const VectorXd boundary = boundary_residuals(tr, problem.start, problem.goal);
  VectorXd hold(0);
  if (problem.hold_final_input) hold = tr.inputs[tr.knots() - 1] - tr.inputs[tr.knots() - 2];
  VectorXd out(defects.size() + boundary.size() + hold.size());
  out << defects, boundary, hold;
  return out;
}

namespace {

SparseMatrix stack_rows(const SparseMatrix& top, const SparseMatrix& bottom) {
  SparseMatrix out(top.rows() + bottom.rows(), top.cols());
  out.reserve(top.nonZeros() + bottom.nonZeros());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(top.nonZeros() + bottom.nonZeros());
  for (int r = 0; r < top.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(top, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  }
  for (int r = 0; r < bottom.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(bottom, r); it; ++it) {
      t.emplace_back(top.rows() + r, it.col(), it.value());
    }
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix hold_jacobian(const Transcription& tr) {
  const int nu = tr.input_dim();
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < nu; ++i) {
    t.emplace_back(i, tr.input_offset(tr.knots() - 1) + i, 1.0);
    t.emplace_back(i, tr.input_offset(tr.knots() - 2) + i, -1.0);
  }
  SparseMatrix jac(nu, tr.decision_dim());
  jac.setFromTriplets(t.begin(), t.end());
  return jac;
}

}  // namespace

nlp::NlpProblem make_nlp(const CollocationProblem& problem) {
  problem.guess.validate();
  if (problem.hold_final_input && problem.guess.knots() < 2) {
    throw std::invalid_argument("make_nlp: holding the final input needs two knots");
  }
  auto data = std::make_shared<const CollocationProblem>(problem);
  auto f = std::make_shared<const DynamicsFn>(
      planning_dynamics(problem.inequalities.body, problem.inequalities.terrain));
  const Transcription& skeleton = data->guess;

  nlp::NlpProblem nlp;
  nlp.dimension = skeleton.decision_dim();
  nlp.initial_guess = skeleton.to_decision_vector();

  auto unpack = [data](const VectorXd& y) { return data->guess.with_decision_vector(y); };

  nlp.cost = [data, unpack](const VectorXd& y) { return cost(unpack(y), data->refs, data->weights); };
  nlp.cost_gradient = [data, unpack](const VectorXd& y) {
    return cost_gradient(unpack(y), data->refs, data->weights);
  };
  nlp.cost_hessian_diagonal = [data, unpack](const VectorXd& y) {
    return cost_hessian_diagonal(unpack(y), data->weights);
  };
  nlp.equalities = [data, unpack](const VectorXd& y) { return planning_equalities(unpack(y), *data); };
  nlp.equality_jacobian = [data, f, unpack](const VectorXd& y) {
    const Transcription tr = unpack(y);
    SparseMatrix jac =
        stack_rows(collocation_defect_jacobian(tr, *f, data->fd_step), boundary_jacobian(tr, data->goal));
    if (data->hold_final_input) jac = stack_rows(jac, hold_jacobian(tr));
    return jac;
  };
  nlp.inequalities = [data, unpack](const VectorXd& y) {
    return inequality_constraints(unpack(y), data->inequalities);
  };
  nlp.inequality_jacobian = [data, unpack](const VectorXd& y) {
    return inequality_jacobian(unpack(y), data->inequalities, data->fd_step);
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  nlp.lower = VectorXd::Constant(nlp.dimension, -inf);
  nlp.upper = VectorXd::Constant(nlp.dimension, inf);
  const auto& stance = data->inequalities.stance;
  for (int k = 0; k < skeleton.knots(); ++k) {
    for (int i = 0; i < kNumLegs; ++i) {
      if (stance[k][i]) continue;
      const int col = skeleton.input_offset(k) + ii::kGrf + 3 * i;
      nlp.lower.segment<3>(col).setZero();
      nlp.upper.segment<3>(col).setZero();
      nlp.initial_guess.segment<3>(col).setZero();
    }
  }
  const int tf = skeleton.final_time_offset();
  if (skeleton.free_final_time) {
    nlp.lower[tf] = data->final_time_min;
    nlp.upper[tf] = data->final_time_max;
  } else {
    nlp.lower[tf] = nlp.upper[tf] = skeleton.final_time();
  }
  return nlp;
}

}  // namespace wair
