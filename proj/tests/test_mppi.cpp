#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "trav/mppi.hpp"

using namespace trav;

namespace {

RiskSpeedMap uniform_map(double value, int rows = 100, int cols = 100,
                         double resolution = 0.4, double ox = -20.0,
                         double oy = -20.0) {
  GridGeometry geom;
  geom.rows = rows;
  geom.cols = cols;
  geom.resolution = resolution;
  geom.origin_x = ox;
  geom.origin_y = oy;
  RiskSpeedMap map(geom, 10, 5.0);
  std::fill(map.values.begin(), map.values.end(), value);
  return map;
}

}  // namespace

TEST_CASE("wrap_angle stays in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(2.0 * M_PI + 0.3) == doctest::Approx(0.3));
  CHECK(wrap_angle(-2.0 * M_PI - 0.3) == doctest::Approx(-0.3));
}

TEST_CASE("dynamics_step hand cases") {
  MppiConfig cfg;  // wheel_radius 0.3, track_width 1.2, dt 0.05

  SUBCASE("straight drive") {
    // v = 0.3 * (10 + 10) / 2 = 3 m/s, so 0.15 m in one 0.05 s step
    RobotState s{1.0, 2.0, 0.0, 0.0};
    const RobotState n = dynamics_step(s, {10.0, 10.0}, 0.05, cfg);
    CHECK(n.x == doctest::Approx(1.15));
    CHECK(n.y == doctest::Approx(2.0));
    CHECK(n.heading == doctest::Approx(0.0));
    CHECK(n.speed == doctest::Approx(3.0));
  }

  SUBCASE("straight drive along +y") {
    RobotState s{0.0, 0.0, M_PI / 2.0, 0.0};
    const RobotState n = dynamics_step(s, {10.0, 10.0}, 0.05, cfg);
    CHECK(n.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n.y == doctest::Approx(0.15));
  }

  SUBCASE("pure rotation") {
    // omega = 0.3 * (4 - (-4)) / 1.2 = 2 rad/s
    RobotState s{0.5, -0.5, 0.1, 0.0};
    const RobotState n = dynamics_step(s, {-4.0, 4.0}, 0.05, cfg);
    CHECK(n.x == doctest::Approx(0.5));
    CHECK(n.y == doctest::Approx(-0.5));
    CHECK(n.heading == doctest::Approx(0.2));
    CHECK(n.speed == doctest::Approx(0.0));
  }

  SUBCASE("reverse reports positive speed") {
    RobotState s{0.0, 0.0, 0.0, 0.0};
    const RobotState n = dynamics_step(s, {-10.0, -10.0}, 0.05, cfg);
    CHECK(n.x == doctest::Approx(-0.15));
    CHECK(n.speed == doctest::Approx(3.0));
  }
}

TEST_CASE("rollout_cost hand cases") {
  MppiConfig cfg;  // dt 0.05, s_default 0.5, goal_tolerance 3, s_floor 0.05
  const RiskSpeedMap map = uniform_map(1.0);

  SUBCASE("per-step traversal time on a uniform map") {
    // speed 2 on map value 1: each of 4 transitions costs 2 * 0.05 / 1 = 0.1;
    // last state sits inside the goal so no terminal term.
    MppiConfig tight = cfg;
    tight.goal_tolerance = 0.5;
    std::vector<RobotState> states(5);
    for (int t = 0; t < 5; ++t) states[t] = {double(t), 0.0, 0.0, 2.0};
    const double c = rollout_cost(states, map, 4.0, 0.0, tight);
    CHECK(c == doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("first state already at the goal costs nothing") {
    std::vector<RobotState> states(10);
    for (int t = 0; t < 10; ++t) states[t] = {double(t), 0.0, 0.0, 2.0};
    CHECK(rollout_cost(states, map, 1.0, 0.0, cfg) == 0.0);
  }

  SUBCASE("goal reached mid-rollout absorbs the tail") {
    // states 0..2 are outside the tolerance of goal (6, 0); state 3 at x=3
    // is the first inside. Cost = 3 transitions, nothing after.
    std::vector<RobotState> states(8);
    for (int t = 0; t < 8; ++t) states[t] = {double(t), 0.0, 0.0, 2.0};
    CHECK(rollout_cost(states, map, 6.0, 0.0, cfg) ==
          doctest::Approx(0.3).epsilon(1e-12));
  }

  SUBCASE("terminal time-to-go") {
    // single state 5 m from the goal: 5 / 0.5 = 10 s
    std::vector<RobotState> states{{0.0, 0.0, 0.0, 0.0}};
    CHECK(rollout_cost(states, map, 5.0, 3.0, cfg) ==
          doctest::Approx(std::sqrt(34.0) / 0.5).epsilon(1e-12));
    CHECK(rollout_cost(states, map, 5.0, 0.0, cfg) ==
          doctest::Approx(10.0).epsilon(1e-12));
  }

  SUBCASE("unknown terrain hits the speed floor") {
    RiskSpeedMap unknown = uniform_map(1.0);
    std::fill(unknown.values.begin(), unknown.values.end(),
              RiskSpeedMap::kUnknown);
    std::vector<RobotState> states(2);
    states[0] = {0.0, 0.0, 0.0, 2.0};
    states[1] = {0.1, 0.0, 0.0, 2.0};
    // floor 0.05: 2 * 0.05 / 0.05 = 2, plus terminal from state 1
    const double c = rollout_cost(states, unknown, 50.0, 0.0, cfg);
    CHECK(c == doctest::Approx(2.0 + 49.9 / 0.5).epsilon(1e-9));
  }

  SUBCASE("faster map dominates slower map") {
    const RiskSpeedMap slow = uniform_map(0.5);
    std::vector<RobotState> states(20);
    for (int t = 0; t < 20; ++t) states[t] = {0.1 * t, 0.0, 0.0, 2.0};
    CHECK(rollout_cost(states, map, 50.0, 0.0, cfg) <
          rollout_cost(states, slow, 50.0, 0.0, cfg));
  }
}

TEST_CASE("mppi_step validates input and is deterministic") {
  MppiConfig cfg;
  cfg.n_rollouts = 64;
  cfg.horizon_steps = 30;
  cfg.seed = 5;
  const RiskSpeedMap map = uniform_map(3.0);
  const RobotState start{0.0, 0.0, 0.0, 0.0};
  ControlSequence nominal(30);

  CHECK_THROWS(mppi_step({}, start, map, 10.0, 0.0, cfg, 0));
  MppiConfig bad = cfg;
  bad.n_rollouts = 0;
  CHECK_THROWS(mppi_step(nominal, start, map, 10.0, 0.0, bad, 0));

  const ControlSequence a = mppi_step(nominal, start, map, 10.0, 0.0, cfg, 0);
  const ControlSequence b = mppi_step(nominal, start, map, 10.0, 0.0, cfg, 0);
  REQUIRE(a.size() == b.size());
  for (size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].omega_left == b[t].omega_left);
    CHECK(a[t].omega_right == b[t].omega_right);
  }

  // a different iteration index uses fresh noise
  const ControlSequence c = mppi_step(nominal, start, map, 10.0, 0.0, cfg, 1);
  bool any_different = false;
  for (size_t t = 0; t < a.size(); ++t)
    any_different = any_different || a[t].omega_left != c[t].omega_left;
  CHECK(any_different);

  // controls respect the clamp
  for (const auto& u : a) {
    CHECK(std::abs(u.omega_left) <= cfg.omega_max);
    CHECK(std::abs(u.omega_right) <= cfg.omega_max);
  }
}

TEST_CASE("zero noise returns the nominal sequence unchanged") {
  MppiConfig cfg;
  cfg.n_rollouts = 16;
  cfg.horizon_steps = 10;
  cfg.noise_std = 0.0;
  const RiskSpeedMap map = uniform_map(2.0);
  ControlSequence nominal(10, {3.0, 4.0});
  const ControlSequence out =
      mppi_step(nominal, {0.0, 0.0, 0.0, 0.0}, map, 10.0, 0.0, cfg, 0);
  for (size_t t = 0; t < out.size(); ++t) {
    CHECK(out[t].omega_left == 3.0);
    CHECK(out[t].omega_right == 4.0);
  }
}

TEST_CASE("iterated updates drive the nominal cost down") {
  MppiConfig cfg;
  cfg.n_rollouts = 200;
  cfg.horizon_steps = 40;
  cfg.seed = 11;
  const RiskSpeedMap map = uniform_map(4.0);
  const RobotState start{0.0, 0.0, 0.0, 0.0};
  ControlSequence nominal(40);

  auto nominal_cost = [&](const ControlSequence& seq) {
    std::vector<RobotState> states(seq.size() + 1);
    states[0] = start;
    for (size_t t = 0; t < seq.size(); ++t)
      states[t + 1] = dynamics_step(states[t], seq[t], cfg.dt, cfg);
    return rollout_cost(states, map, 8.0, 0.0, cfg);
  };

  const double before = nominal_cost(nominal);
  MppiDiagnostics diag;
  for (uint64_t it = 0; it < 40; ++it)
    nominal = mppi_step(nominal, start, map, 8.0, 0.0, cfg, it, &diag);
  const double after = nominal_cost(nominal);
  CHECK(after < before);
  CHECK(diag.min_cost <= diag.mean_cost);
  // the optimized plan should be well under the do-nothing baseline
  CHECK(after < 0.5 * before);
}

TEST_CASE("receding horizon reaches a nearby goal on an open map") {
  MppiConfig cfg;
  cfg.n_rollouts = 150;
  cfg.horizon_steps = 40;
  cfg.seed = 3;
  cfg.burn_in = 5;
  const RiskSpeedMap map = uniform_map(4.0);
  const auto provider = [&](const RobotState&) -> const RiskSpeedMap& {
    return map;
  };

  SUBCASE("immediate success when starting inside the tolerance") {
    const PlanResult r =
        receding_horizon_control({0.0, 0.0, 0.0, 0.0}, provider, 1.0, 1.0, cfg,
                                 10.0);
    CHECK(r.success);
    CHECK(r.time == 0.0);
  }

  SUBCASE("drives to a goal 10 m away") {
    const PlanResult r =
        receding_horizon_control({0.0, 0.0, 0.0, 0.0}, provider, 10.0, 0.0, cfg,
                                 30.0);
    CHECK(r.success);
    CHECK(r.time < 30.0);
    REQUIRE(!r.trajectory.empty());
    const RobotState& last = r.trajectory.back().state;
    const double d = std::hypot(last.x - 10.0, last.y - 0.0);
    CHECK(d <= cfg.goal_tolerance);
    // minimum-time behavior: 7 m to the tolerance boundary at up to 5 m/s
    CHECK(r.time >= 7.0 / 5.0);
  }

  SUBCASE("gives up at the cutoff when the goal is unreachable in time") {
    const PlanResult r =
        receding_horizon_control({0.0, 0.0, 0.0, 0.0}, provider, 200.0, 0.0,
                                 cfg, 2.0);
    CHECK(!r.success);
    CHECK(r.time >= 2.0);
  }
}

TEST_CASE("plant callback overrides the kinematic model") {
  MppiConfig cfg;
  cfg.n_rollouts = 32;
  cfg.horizon_steps = 20;
  // a plant that never moves: planner cannot succeed
  const RiskSpeedMap map = uniform_map(4.0);
  const auto provider = [&](const RobotState&) -> const RiskSpeedMap& {
    return map;
  };
  const PlantStep frozen = [](const RobotState& s, const Control&) {
    return s;
  };
  const PlanResult r = receding_horizon_control({0.0, 0.0, 0.0, 0.0}, provider,
                                                10.0, 0.0, cfg, 1.0, frozen);
  CHECK(!r.success);
  for (const auto& p : r.trajectory) {
    CHECK(p.state.x == 0.0);
    CHECK(p.state.y == 0.0);
  }
}

TEST_CASE("trajectory CSV has the documented header and one row per point") {
  std::vector<TrajectoryPoint> traj(3);
  traj[0] = {0.0, {0.0, 0.0, 0.0, 0.0}, {1.0, 2.0}, 0.1};
  traj[1] = {0.05, {0.1, 0.0, 0.0, 2.0}, {3.0, 4.0}, 0.2};
  traj[2] = {0.1, {0.2, 0.0, 0.0, 2.0}, {}, 0.0};
  const std::string path = "test_traj.csv";
  save_trajectory_csv(traj, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,y,heading,speed,omega_l,omega_r,stage_cost");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  in.close();
  std::remove(path.c_str());
}
