#include "lhop/reward.hpp"

#include <algorithm>
#include <cmath>

namespace lhop::reward {

double RewardConfig::v_threshold() const {
  return alpha * std::sqrt(2.0 * g * std::max(0.0, h_cmd - h_stance));
}

PhaseWeights phase_weights(double height_above_terrain, double v_z,
                           const RewardConfig& config) {
  double v_thr = config.v_threshold();
  PhaseWeights w;
  w.near_ground = height_above_terrain <= config.h_thr;
  w.ascending = v_z > v_thr;
  w.descending = v_z < -v_thr;
  w.takeoff = w.near_ground && w.ascending;
  w.land = w.near_ground && w.descending;
  w.flight = !w.near_ground;
  return w;
}

double global_reward(const sim::RobotState& state, double action_reg,
                     std::optional<double> jump_apex, const RewardConfig& config) {
  const RewardWeights& w = config.weights;
  double dv = state.com_velocity.x - config.v_x_cmd;
  double r = w.velocity * std::exp(-w.velocity_k * dv * dv) - w.regularization * action_reg;
  if (jump_apex && std::abs(*jump_apex - config.h_cmd) <= config.delta_h) r += 1.0;
  return r;
}

StageRewards stage_rewards(const sim::RobotState& state, const RewardConfig& config) {
  const RewardWeights& w = config.weights;
  StageRewards r;
  double dv = state.com_velocity.z - config.v_threshold();
  r.takeoff = std::exp(-w.takeoff_k * dv * dv);
  r.flight = -w.flight_attitude * (state.roll * state.roll + state.pitch * state.pitch);
  double max_foot = 0.0;  // penetration tolerance is numerical, not height
  for (double h : state.foot_heights) max_foot = std::max(max_foot, h);
  r.land = -state.com_velocity.z * state.com_velocity.z - w.land_foot * max_foot;
  return r;
}

RewardBreakdown total_reward(const sim::RobotState& state, double action_reg,
                             std::optional<double> jump_apex, const RewardConfig& config) {
  RewardBreakdown b;
  b.phase = phase_weights(state.height_above_terrain(), state.com_velocity.z, config);
  StageRewards stages = stage_rewards(state, config);
  b.takeoff = stages.takeoff;
  b.flight = stages.flight;
  b.land = stages.land;
  b.peak = jump_apex && std::abs(*jump_apex - config.h_cmd) <= config.delta_h ? 1.0 : 0.0;
  b.global = global_reward(state, action_reg, jump_apex, config);
  b.total = b.global + (b.phase.takeoff ? b.takeoff : 0.0) +
            (b.phase.flight ? b.flight : 0.0) + (b.phase.land ? b.land : 0.0);
  return b;
}

}  // namespace lhop::reward
