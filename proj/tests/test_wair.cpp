#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "test_util.hpp"
#include "wair/serialization.hpp"
#include "wair/wair.hpp"

namespace wair {
namespace {

namespace si = state_index;

ScenarioConfig coarse_config() {
  ScenarioConfig c;
  c.transcription.knots = 11;
  return c;
}

// Converged coarse plans shared by the tests below.
struct Solved {
  WairInstance instance;
  PlanResult result;
  ValidationResult validation;
};

const Solved& solved(double slope_deg) {
  static std::map<double, Solved> cache;
  auto it = cache.find(slope_deg);
  if (it == cache.end()) {
    Solved s{build_instance(slope_deg * kDegToRad, coarse_config()), {}, {}};
    s.result = plan(s.instance);
    s.validation = validate(s.result, s.instance);
    it = cache.emplace(slope_deg, std::move(s)).first;
  }
  return it->second;
}

TEST(Gait, TwoDiagonalLegsInStanceEverywhere) {
  const GaitSchedule gait(0.8);
  for (int n = 0; n <= 3000; ++n) {
    const double t = 2.4 * n / 3000.0;
    const StanceFlags s = gait.stance_at(t);
    EXPECT_EQ(std::count(s.begin(), s.end(), true), 2) << "t = " << t;
    EXPECT_EQ(s[0], s[3]);
    EXPECT_EQ(s[1], s[2]);
    EXPECT_NE(s[0], s[1]);
  }
}

TEST(Gait, BoundaryBelongsToEndingPhase) {
  const GaitSchedule gait(0.8);
  EXPECT_TRUE(gait.in_stance(0, 0.0));
  EXPECT_TRUE(gait.in_stance(0, 0.4));
  EXPECT_TRUE(gait.in_stance(1, 0.4 + 1e-6));
  EXPECT_TRUE(gait.in_stance(1, 0.8));
  EXPECT_TRUE(gait.in_stance(0, 0.8 + 1e-6));
  EXPECT_EQ(gait.phase_index(0.4), 0);
  EXPECT_EQ(gait.phase_index(0.41), 1);
  EXPECT_THROW(GaitSchedule(0.0), std::invalid_argument);
  EXPECT_THROW(GaitSchedule::pair_of(4), std::out_of_range);
}

TEST(Kinematics, InverseRoundTrip) {
  test::Rng rng(41);
  for (int n = 0; n < 200; ++n) {
    const Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(0.1, 0.5));
    const Vec3 back = leg_inverse_kinematics(leg_vector(q[0], q[1], q[2]));
    EXPECT_LT((back - q).norm(), 1e-12);
  }
  EXPECT_THROW(leg_inverse_kinematics(Vec3::Zero()), std::invalid_argument);
}

TEST(Reference, ClimbsAlongTheSlope) {
  const ScenarioConfig config;
  for (const double deg : {0.0, 45.0}) {
    const Terrain terrain(deg * kDegToRad);
    const ReferenceClimb ref(terrain, GaitSchedule(0.8), config.gait, config.body, 0.0);
    const StateVector x = ref.state(0.3);
    const Vec3 v = x.segment<3>(si::kVelocity);
    const double a = deg * kDegToRad;
    EXPECT_LT((v.normalized() - Vec3(std::cos(a), 0.0, std::sin(a))).norm(), 1e-12);
    EXPECT_NEAR(v.norm(), config.gait.stride_length / config.gait.stride_period, 1e-12);
    EXPECT_NEAR(ref.displacement(0.8) - ref.displacement(0.0), config.gait.stride_length, 1e-12);
    if (deg == 0.0) {
      EXPECT_EQ(v.z(), 0.0);
    }
  }
}

TEST(Reference, FeetFollowTheGait) {
  const ScenarioConfig config;
  const Terrain terrain(30 * kDegToRad);
  const GaitSchedule gait(0.8);
  const ReferenceClimb ref(terrain, gait, config.gait, config.body, 0.0);
  for (int n = 0; n <= 80; ++n) {
    const double t = 0.8 * n / 80.0;
    const HromState x = HromState::unflatten(ref.state(t));
    for (int i = 0; i < kNumLegs; ++i) {
      const Vec3 foot = terrain.to_terrain(foot_position(x.body, x.legs, i, config.body));
      EXPECT_LT((foot - ref.foot_terrain(i, t)).norm(), 1e-12);
      if (gait.in_stance(i, t)) {
        EXPECT_NEAR(foot.z(), 0.0, 1e-12);
        EXPECT_NEAR(foot.x(), ref.foot_terrain(i, 0.0).x(), gait.in_stance(i, 0.0) ? 1e-12 : 1e9);
      } else {
        EXPECT_GE(foot.z(), -1e-12);
      }
    }
  }
}

TEST(Instance, KnotStanceMatchesGaitAndReplaySchedule) {
  const WairInstance inst = build_instance(0.2, coarse_config());
  const Transcription& tr = inst.problem.guess;
  for (int k = 0; k < tr.knots(); ++k) {
    EXPECT_EQ(inst.knot_stance[k], inst.gait.stance_at(tr.knot_times[k])) << "knot " << k;
    EXPECT_EQ(inst.problem.inequalities.stance[k], inst.knot_stance[k]);
  }
  const InputSchedule schedule = replay_schedule(tr, inst);
  EXPECT_EQ(schedule.stance, inst.knot_stance);
  EXPECT_EQ(schedule.times, tr.knot_times);
}

TEST(Instance, DeterministicAndValidated) {
  const WairInstance a = build_instance(0.3, coarse_config());
  const WairInstance b = build_instance(0.3, coarse_config());
  EXPECT_EQ(transcription_to_json(a.problem.guess).dump(), transcription_to_json(b.problem.guess).dump());
  EXPECT_EQ(a.problem.goal.target, b.problem.goal.target);
  EXPECT_THROW(build_instance(1.2, coarse_config()), std::invalid_argument);
  ScenarioConfig bad = coarse_config();
  bad.contact.k1 = 0.0;
  EXPECT_THROW(build_instance(0.0, bad), ConfigError);
}

TEST(Plan, FlatGroundNeedsLittleThrust) {
  const Solved& s = solved(0.0);
  ASSERT_TRUE(s.result.converged()) << s.result.report.message;
  const WairMetrics& m = s.validation.metrics;
  EXPECT_LE(m.max_defect, 1e-6);
  EXPECT_GE(m.min_cone_margin, -1e-6);
  EXPECT_GE(m.min_swing_clearance, -1e-6);
  EXPECT_NEAR(m.climb_distance, 0.2, 0.01);
  // The legs alone can carry the weight on flat ground; allow 5% of the
  // weight impulse over the stride.
  const double weight_impulse = s.instance.body.mass * 9.81 * 0.8;
  EXPECT_LT(m.thruster_impulse, 0.05 * weight_impulse);
}

TEST(Plan, SteepSlopeUsesThrust) {
  const Solved& s = solved(45.0);
  ASSERT_TRUE(s.result.converged()) << s.result.report.message;
  const WairMetrics& m = s.validation.metrics;
  EXPECT_GE(m.min_cone_margin, -1e-6);
  EXPECT_GE(m.min_swing_clearance, -1e-6);
  EXPECT_GT(m.thruster_impulse, solved(0.0).validation.metrics.thruster_impulse);
  EXPECT_GT(m.thruster_impulse, 1.0);
}

TEST(Plan, PlannedGrfRolloutStaysInsideCones) {
  const Solved& s = solved(20.0);
  ASSERT_TRUE(s.result.converged());
  RolloutOptions options;
  options.dt = 1e-3;
  options.duration = 0.8;
  options.contact_mode = ContactMode::kPlanned;
  const Trajectory traj =
      rollout(HromState::unflatten_projected(StateVector(s.result.plan.states.front())),
              replay_schedule(s.result.plan, s.instance), options, s.instance.body, s.instance.contact,
              s.instance.terrain);
  EXPECT_GE(traj.min_cone_margin, -1e-6);
}

TEST(Validate, ReplayCoversThePlan) {
  const Solved& s = solved(0.0);
  const Trajectory& replay = s.validation.replay;
  EXPECT_EQ(replay.states.size(), 801u);
  EXPECT_TRUE(s.validation.metrics.replay_error.empty());
  EXPECT_GE(s.validation.metrics.replay_grf_divergence, 0.0);
  EXPECT_EQ(s.validation.metrics.replay_diverged, s.validation.metrics.replay_grf_divergence > 0.2);
}

TEST(WarmStart, IdenticalInstanceIsVerbatim) {
  const Solved& s = solved(0.0);
  const WarmStart w = warm_start(s.result.plan, s.result.multipliers, s.instance, s.instance);
  EXPECT_EQ(w.guess.states, s.result.plan.states);
  EXPECT_EQ(w.guess.inputs, s.result.plan.inputs);
  EXPECT_EQ(w.guess.knot_times, s.result.plan.knot_times);
  ASSERT_TRUE(w.multipliers);
  EXPECT_EQ(w.multipliers->equality, s.result.multipliers.equality);
}

TEST(WarmStart, ShiftedInstanceStartsExactly) {
  const Solved& s = solved(0.0);
  for (const double deg : {0.0, 30.0}) {
    const WairInstance next = build_instance(deg * kDegToRad, coarse_config(), 1);
    const WarmStart w = warm_start(s.result.plan, s.result.multipliers, s.instance, next);
    const VectorXd r = boundary_residuals(w.guess, next.problem.start, next.problem.goal);
    EXPECT_EQ(r.head(kStateDim).cwiseAbs().maxCoeff(), 0.0);
    auto orthogonality = [](const VectorXd& x) {
      const Eigen::Map<const Mat3> R(x.data() + si::kRotation);
      return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    };
    for (int k = 1; k < w.guess.knots(); ++k) {
      EXPECT_NEAR(orthogonality(w.guess.states[k]), orthogonality(s.result.plan.states[k]), 1e-12);
    }
  }
  EXPECT_THROW(warm_start(s.result.plan, s.result.multipliers, s.instance, build_instance(0.0, ScenarioConfig{})),
               std::invalid_argument);
}

TEST(WarmStart, SecondStrideNeedsFewerIterations) {
  const Solved& s = solved(0.0);
  const WairInstance next = build_instance(0.0, coarse_config(), 1);
  const PlanResult cold = plan(next);
  const PlanResult warm = plan(next, warm_start(s.result.plan, s.result.multipliers, s.instance, next));
  ASSERT_TRUE(cold.converged());
  ASSERT_TRUE(warm.converged());
  EXPECT_LT(warm.report.inner_iterations, cold.report.inner_iterations);
  EXPECT_LE(warm.report.outer_iterations, cold.report.outer_iterations);
}

TEST(Plan, InfeasibleInstanceIsNotReportedAsSuccess) {
  ScenarioConfig config = coarse_config();
  config.thrust_max = Vec3::Zero();
  config.cone_mu = 0.2;
  config.solver.max_outer_iterations = 8;
  const WairInstance inst = build_instance(45 * kDegToRad, config);
  const PlanResult r = plan(inst);
  const WairMetrics m = validate(r, inst).metrics;
  EXPECT_TRUE(!r.converged() || m.min_cone_margin < -1e-6);
  EXPECT_NE(m.status, "converged");
}

}  // namespace
}  // namespace wair
