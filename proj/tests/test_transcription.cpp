#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "wair/hrom_transcription.hpp"
#include "wair/wair.hpp"

namespace wair {
namespace {

namespace ii = input_index;
using Eigen::MatrixXd;

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.transcription.knots = 5;
  return c;
}

MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& fn, const VectorXd& y,
                     double h = 1e-6) {
  const VectorXd f0 = fn(y);
  MatrixXd jac(f0.size(), y.size());
  for (int i = 0; i < y.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(y[i]));
    VectorXd yp = y, ym = y;
    yp[i] += step;
    ym[i] -= step;
    jac.col(i) = (fn(yp) - fn(ym)) / (2 * step);
  }
  return jac;
}

TEST(Transcription, PlanningInputRotatesGrfsOnly) {
  const Terrain terrain(0.5);
  test::Rng rng(31);
  const VectorXd u = rng.vector(kInputDim);
  const InputVector w = planning_input_to_world(u, terrain);
  for (int i = 0; i < kNumLegs; ++i) {
    const Vec3 f = u.segment<3>(ii::kGrf + 3 * i);
    EXPECT_LT((w.grf[i] - terrain.surface_to_world().matrix() * f).norm(), 1e-15);
  }
  EXPECT_EQ(w.thrust, Vec3(u.segment<3>(ii::kThrust)));
  EXPECT_EQ(w.joint_accel, Vector12(u.head<kLegDofs>()));
  EXPECT_LT((world_input_to_planning(w, terrain) - u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Transcription, PlanningDynamicsMatchesWorldDynamics) {
  const BodyParams body;
  const Terrain terrain(0.3);
  test::Rng rng(32);
  const DynamicsFn f = planning_dynamics(body, terrain);
  for (int n = 0; n < 10; ++n) {
    const StateVector x = rng.state(body).flatten();
    const VectorXd u = rng.vector(kInputDim, 5.0);
    const StateVector oracle = state_derivative(x, planning_input_to_world(u, terrain), body);
    EXPECT_LT((f(x, u) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

HromState hover_state(double height) {
  HromState x;
  x.body.position = Vec3(0.0, 0.0, height);
  for (int i = 0; i < kNumLegs; ++i) x.legs.set_leg(i, 0.0, 0.0, 0.3);
  return x;
}

TEST(KnotInequalities, HoverHasOnlyPositiveRows) {
  InequalitySettings s;
  const VectorXd x = hover_state(1.0).flatten();
  VectorXd u = VectorXd::Zero(kInputDim);
  u.segment<3>(ii::kThrust) = Vec3(1.0, -2.0, 30.0);
  const VectorXd g = knot_inequalities(x, u, {false, false, false, false}, s);
  ASSERT_EQ(g.size(), 6 + 8 + 4);
  EXPECT_GT(g.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(g[0], 10.0 - 1.0);
  EXPECT_DOUBLE_EQ(g[1], 10.0 + 1.0);
  EXPECT_DOUBLE_EQ(g[5], 40.0 + 30.0);
  EXPECT_DOUBLE_EQ(g[6], 0.3 - s.body.leg_length_min);
  EXPECT_DOUBLE_EQ(g[7], s.body.leg_length_max - 0.3);
  EXPECT_NEAR(g[14], 1.0 - 0.3, 1e-12);
}

TEST(KnotInequalities, ConeBoundaryRowIsZero) {
  InequalitySettings s;
  const VectorXd x = hover_state(0.3).flatten();
  VectorXd u = VectorXd::Zero(kInputDim);
  u.segment<3>(ii::kGrf) = Vec3(0.35, 0.0, 0.5);
  u.segment<3>(ii::kGrf + 3) = Vec3(0.0, 0.1, 2.0);
  const VectorXd g = knot_inequalities(x, u, {true, true, false, false}, s);
  ASSERT_EQ(g.size(), 6 + 8 + 2 + 2 + 1 + 1);
  EXPECT_EQ(g[14], 0.0);
  EXPECT_EQ(g[15], 0.5);
  EXPECT_NEAR(g[16], 0.7 * 2.0 - 0.1, 1e-15);
}

TEST(KnotInequalities, SwingFootBelowSurfaceIsNegative) {
  InequalitySettings s;
  s.terrain = Terrain(0.2);
  const VectorXd x = hover_state(0.25).flatten();
  const VectorXd g = knot_inequalities(x, VectorXd::Zero(kInputDim), {true, false, false, true}, s);
  // Leg 1 (front) sits lower relative to a surface rising along +x.
  EXPECT_LT(g[6 + 8 + 2], 0.0);
  const Vec3 foot = foot_position(x, 1, s.body);
  EXPECT_NEAR(g[6 + 8 + 2], s.terrain.height(foot), 1e-15);
}

TEST(KnotInequalities, JacobianMatchesFiniteDifferences) {
  const WairInstance inst = build_instance(0.35, small_config());
  Transcription tr = inst.problem.guess;
  test::Rng rng(33);
  for (VectorXd& u : tr.inputs) u += rng.vector(kInputDim, 0.5);
  const VectorXd y = tr.to_decision_vector();
  const MatrixXd jac(inequality_jacobian(tr, inst.problem.inequalities));
  const MatrixXd fd = fd_jacobian(
      [&](const VectorXd& z) { return inequality_constraints(tr.with_decision_vector(z), inst.problem.inequalities); },
      y);
  EXPECT_LT((jac.leftCols(y.size() - 1) - fd.leftCols(y.size() - 1)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(PlanningNlp, EqualityJacobianMatchesFiniteDifferences) {
  const WairInstance inst = build_instance(0.2, small_config());
  const nlp::NlpProblem p = make_nlp(inst.problem);
  test::Rng rng(34);
  const VectorXd y = p.initial_guess + rng.vector(p.dimension, 1e-2);
  const MatrixXd jac(p.equality_jacobian(y));
  const MatrixXd fd = fd_jacobian(p.equalities, y);
  const int n = p.dimension - 1;
  EXPECT_LT((jac.leftCols(n) - fd.leftCols(n)).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(PlanningNlp, FinalInputHoldRows) {
  const WairInstance inst = build_instance(0.0, small_config());
  ASSERT_TRUE(inst.problem.hold_final_input);
  Transcription tr = inst.problem.guess;
  tr.inputs[4][ii::kThrust] = tr.inputs[3][ii::kThrust] + 2.5;
  const VectorXd c = planning_equalities(tr, inst.problem);
  ASSERT_EQ(c.size(), 4 * kStateDim + kStateDim + 9 + kInputDim);
  const VectorXd hold = c.tail(kInputDim);
  EXPECT_DOUBLE_EQ(hold[ii::kThrust], 2.5);
  EXPECT_EQ(hold.cwiseAbs().sum(), 2.5);
}

TEST(PlanningNlp, SwingGrfsAndFinalTimeArePinned) {
  ScenarioConfig config = small_config();
  const WairInstance inst = build_instance(0.1, config);
  const nlp::NlpProblem p = make_nlp(inst.problem);
  const Transcription& tr = inst.problem.guess;
  int pinned = 0;
  for (int k = 0; k < tr.knots(); ++k) {
    for (int i = 0; i < kNumLegs; ++i) {
      const int col = tr.input_offset(k) + ii::kGrf + 3 * i;
      const bool swing = !inst.knot_stance[k][i];
      for (int a = 0; a < 3; ++a) {
        EXPECT_EQ(p.lower[col + a] == p.upper[col + a], swing);
        if (swing) {
          EXPECT_EQ(p.upper[col + a], 0.0);
        }
      }
      pinned += swing;
    }
  }
  EXPECT_EQ(pinned, 2 * tr.knots());
  EXPECT_EQ(p.lower[tr.final_time_offset()], p.upper[tr.final_time_offset()]);

  config.transcription.free_final_time = true;
  const nlp::NlpProblem q = make_nlp(build_instance(0.1, config).problem);
  EXPECT_LT(q.lower[tr.final_time_offset()], q.upper[tr.final_time_offset()]);
}

TEST(PlanningNlp, GuessStartsAtBoundary) {
  const WairInstance inst = build_instance(0.3, small_config());
  const VectorXd r = boundary_residuals(inst.problem.guess, inst.problem.start, inst.problem.goal);
  EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace wair
