#pragma once

#include <optional>

#include "lhop/sim.hpp"

namespace lhop::reward {

/// Binary phase indicators derived from CoM height and vertical velocity.
/// Exactly one of takeoff/land can be active; flight is active iff the body
/// is off the near-ground band.
struct PhaseWeights {
  bool takeoff = false;
  bool flight = false;
  bool land = false;
  bool near_ground = false;  // G
  bool ascending = false;    // I_up
  bool descending = false;   // I_down
};

struct RewardWeights {
  double velocity = 1.0;        // w_v
  double velocity_k = 4.0;      // k_v
  double regularization = 0.01; // w_r
  double takeoff_k = 4.0;       // k_z
  double flight_attitude = 0.5; // w_f
  double land_foot = 1.0;       // w_h
};

struct RewardConfig {
  double h_cmd = 0.6;        // commanded apex height above terrain, m
  double h_thr = 0.35;       // near-ground threshold, m
  double alpha = 0.5;
  double g = 1.62;           // m/s^2
  double h_stance = 0.30;    // m
  double delta_h = 0.04;     // apex tolerance for the sparse peak bonus, m
  double v_x_cmd = 0.0;      // m/s
  RewardWeights weights;

  /// v_thr = alpha * sqrt(2 g (h_cmd - h_stance)).
  double v_threshold() const;
};

/// Per-step reward terms; total = global + w_takeoff*takeoff +
/// w_flight*flight + w_land*land (the peak bonus is part of global).
struct RewardBreakdown {
  double global = 0.0;
  double takeoff = 0.0;
  double flight = 0.0;
  double land = 0.0;
  double peak = 0.0;
  double total = 0.0;
  PhaseWeights phase;
};

PhaseWeights phase_weights(double height_above_terrain, double v_z,
                           const RewardConfig& config);

/// Velocity tracking + regularization penalty + sparse peak bonus. jump_apex
/// carries the apex height when an apex event fired at this step, granting
/// the bonus at most once per jump.
double global_reward(const sim::RobotState& state, double action_reg,
                     std::optional<double> jump_apex, const RewardConfig& config);

struct StageRewards {
  double takeoff = 0.0;
  double flight = 0.0;
  double land = 0.0;
};

StageRewards stage_rewards(const sim::RobotState& state, const RewardConfig& config);

RewardBreakdown total_reward(const sim::RobotState& state, double action_reg,
                             std::optional<double> jump_apex, const RewardConfig& config);

}  // namespace lhop::reward
