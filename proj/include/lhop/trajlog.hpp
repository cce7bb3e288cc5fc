#pragma once

#include <string>
#include <vector>

#include "lhop/estimator.hpp"
#include "lhop/reward.hpp"
#include "lhop/sim.hpp"

namespace lhop::trajlog {

/// One control step of an episode: post-step state, the observation and
/// action, per-term rewards with phase weights, and any apex/touchdown events
/// raised inside the step (events carry sub-step timing).
struct StepRecord {
  sim::RobotState state;
  sim::Observation obs;
  sim::Action action;
  reward::RewardBreakdown reward;
  bool apex_event = false;
  double apex_height = 0.0;
  bool touchdown_event = false;
  double td_roll = 0.0;
  double td_pitch = 0.0;
  double td_speed = 0.0;
  double td_time = 0.0;
};

/// Column header of the CSV trajectory log. Doubles are written with %.17g so
/// an offline pass recomputes metrics bit-exactly.
std::string csv_header();

void write_csv(const std::vector<StepRecord>& records, const std::string& path);
std::vector<StepRecord> read_csv(const std::string& path);

/// Observation stream plus ground-truth (v_x, v_y, v_z, h) for the estimator.
estimator::Episode to_episode(const std::vector<StepRecord>& records);

}  // namespace lhop::trajlog
