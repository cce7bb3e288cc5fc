#include <doctest.h>

#include <cmath>

#include "lhop/reward.hpp"
#include "lhop/rng.hpp"

using namespace lhop;
using namespace lhop::reward;

namespace {

RewardConfig lunar_config() {
  RewardConfig rc;
  rc.h_cmd = 0.6;
  rc.h_stance = 0.3;
  rc.h_thr = 0.35;
  rc.g = 1.62;
  rc.v_x_cmd = 0.5;
  return rc;
}

}  // namespace

TEST_CASE("v_thr formula") {
  RewardConfig rc = lunar_config();
  // alpha * sqrt(2 * 1.62 * 0.3) with alpha = 0.5.
  CHECK(rc.v_threshold() == doctest::Approx(0.49295).epsilon(1e-4));
}

TEST_CASE("phase weights: indicator evaluation") {
  RewardConfig rc = lunar_config();
  PhaseWeights w = phase_weights(0.30, 0.6, rc);  // near ground, fast up
  CHECK(w.takeoff);
  CHECK_FALSE(w.flight);
  CHECK_FALSE(w.land);

  w = phase_weights(0.80, 0.6, rc);  // off the ground: flight regardless of v_z
  CHECK_FALSE(w.takeoff);
  CHECK(w.flight);
  CHECK_FALSE(w.land);
  w = phase_weights(0.80, -2.0, rc);
  CHECK(w.flight);
  CHECK_FALSE(w.land);

  w = phase_weights(0.30, -0.6, rc);  // near ground, fast down
  CHECK(w.land);
  CHECK_FALSE(w.takeoff);
  CHECK_FALSE(w.flight);

  // Dead zone: near ground with |v_z| <= v_thr activates nothing.
  w = phase_weights(0.30, 0.1, rc);
  CHECK_FALSE(w.takeoff);
  CHECK_FALSE(w.flight);
  CHECK_FALSE(w.land);
}

TEST_CASE("phase partition property over random inputs") {
  RewardConfig rc = lunar_config();
  Rng rng(4242);
  int dead_zone_hits = 0;
  for (int i = 0; i < 1000000; ++i) {
    double h = rng.uniform(0.0, 1.2);
    double v = rng.uniform(-3.0, 3.0);
    PhaseWeights w = phase_weights(h, v, rc);
    // takeoff and land are mutually exclusive; flight complements G.
    CHECK_FALSE(bool(w.takeoff && w.land));
    CHECK(w.flight == !w.near_ground);
    if (w.near_ground && !w.takeoff && !w.land) {
      ++dead_zone_hits;
      CHECK(std::abs(v) <= rc.v_threshold());
    }
  }
  CHECK(dead_zone_hits > 0);
}

TEST_CASE("global reward: tracking, peak bonus, tolerance") {
  RewardConfig rc = lunar_config();
  sim::RobotState state;
  state.com_velocity = {rc.v_x_cmd, 0.0, 0.0};

  CHECK(global_reward(state, 0.0, std::nullopt, rc) == doctest::Approx(1.0));
  // Peak within tolerance: |0.63 - 0.60| <= 0.04.
  CHECK(global_reward(state, 0.0, 0.63, rc) == doctest::Approx(2.0));
  // Outside tolerance: |0.66 - 0.60| > 0.04.
  CHECK(global_reward(state, 0.0, 0.66, rc) == doctest::Approx(1.0));
  // Regularization penalty enters with weight w_r.
  CHECK(global_reward(state, 2.0, std::nullopt, rc) ==
        doctest::Approx(1.0 - rc.weights.regularization * 2.0));
}

TEST_CASE("stage rewards: formulas and signs") {
  RewardConfig rc = lunar_config();
  sim::RobotState state;

  state.com_velocity.z = rc.v_threshold();
  StageRewards r = stage_rewards(state, rc);
  CHECK(r.takeoff == doctest::Approx(1.0));

  state.roll = 0.0;
  state.pitch = 0.0;
  r = stage_rewards(state, rc);
  CHECK(r.flight == 0.0);

  state.com_velocity.z = -0.5;
  state.foot_heights = {0.1, 0.02, 0.0, 0.05};
  r = stage_rewards(state, rc);
  CHECK(r.land == doctest::Approx(-0.35));  // -0.25 - 1.0 * 0.1
}

TEST_CASE("stage reward bounds over random states") {
  RewardConfig rc = lunar_config();
  Rng rng(99);
  for (int i = 0; i < 20000; ++i) {
    sim::RobotState s;
    s.com_velocity = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)};
    s.roll = rng.uniform(-1.5, 1.5);
    s.pitch = rng.uniform(-1.5, 1.5);
    for (auto& fh : s.foot_heights) fh = rng.uniform(-0.005, 0.6);
    StageRewards r = stage_rewards(s, rc);
    CHECK(r.takeoff > 0.0);
    CHECK(r.takeoff <= 1.0);
    CHECK(r.flight <= 0.0);
    CHECK(r.land <= 0.0);
  }
}

TEST_CASE("total reward assembles the gated sum") {
  RewardConfig rc = lunar_config();
  sim::RobotState state;
  state.com_velocity = {rc.v_x_cmd, 0.0, -0.1};
  state.com_position.z = 1.2;  // deep flight
  state.terrain_height = 0.0;
  RewardBreakdown b = total_reward(state, 0.0, std::nullopt, rc);
  CHECK(b.phase.flight);
  CHECK(b.total == doctest::Approx(b.global + b.flight));
  CHECK(b.total == doctest::Approx(rc.weights.velocity));  // level attitude

  // Dead zone: only the global term contributes.
  state.com_position.z = 0.30;
  state.com_velocity.z = 0.1;
  b = total_reward(state, 0.0, std::nullopt, rc);
  CHECK_FALSE(b.phase.takeoff);
  CHECK_FALSE(b.phase.flight);
  CHECK_FALSE(b.phase.land);
  CHECK(b.total == doctest::Approx(b.global));
}

TEST_CASE("total reward matches an independent single-expression oracle") {
  RewardConfig rc = lunar_config();
  Rng rng(31337);
  for (int i = 0; i < 50000; ++i) {
    sim::RobotState s;
    s.com_position.z = rng.uniform(0.0, 1.3);
    s.terrain_height = 0.0;
    s.com_velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, 2)};
    s.roll = rng.uniform(-0.5, 0.5);
    s.pitch = rng.uniform(-0.5, 0.5);
    for (auto& fh : s.foot_heights) fh = rng.uniform(0.0, 0.5);
    double reg = rng.uniform(0.0, 1.0);
    std::optional<double> apex;
    if (rng.uniform01() < 0.1) apex = rng.uniform(0.4, 0.8);

    RewardBreakdown b = total_reward(s, reg, apex, rc);

    // One flat expression, written independently of the breakdown path.
    double h = s.com_position.z;
    double vz = s.com_velocity.z;
    double v_thr = 0.5 * std::sqrt(2.0 * rc.g * (rc.h_cmd - rc.h_stance));
    double G = h <= rc.h_thr ? 1.0 : 0.0;
    double up = vz > v_thr ? 1.0 : 0.0;
    double down = vz < -v_thr ? 1.0 : 0.0;
    double peak = apex && std::abs(*apex - rc.h_cmd) <= rc.delta_h ? 1.0 : 0.0;
    double maxf = 0.0;
    for (double fh : s.foot_heights) maxf = std::max(maxf, fh);
    double dvx = s.com_velocity.x - rc.v_x_cmd;
    double expected =
        rc.weights.velocity * std::exp(-rc.weights.velocity_k * dvx * dvx) -
        rc.weights.regularization * reg + peak +
        G * up * std::exp(-rc.weights.takeoff_k * (vz - v_thr) * (vz - v_thr)) +
        (1.0 - G) * (-rc.weights.flight_attitude * (s.roll * s.roll + s.pitch * s.pitch)) +
        G * down * (-vz * vz - rc.weights.land_foot * maxf);
    CHECK(b.total == doctest::Approx(expected).epsilon(1e-12));
  }
}
