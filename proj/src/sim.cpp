#include "lhop/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lhop::sim {

namespace {

bool all_finite(const double* p, int n) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

struct Mat3 {
  double m[3][3];

  Vec3 mul(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Vec3 mul_transposed(const Vec3& v) const {
    return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
  }
};

// Body-to-world rotation, ZYX convention (yaw about z, then pitch, then roll).
Mat3 body_to_world(double roll, double pitch, double yaw) {
  double cf = std::cos(roll), sf = std::sin(roll);
  double ct = std::cos(pitch), st = std::sin(pitch);
  double cp = std::cos(yaw), sp = std::sin(yaw);
  return Mat3{{{cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf},
               {sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf},
               {-st, ct * sf, ct * cf}}};
}

// Leg axis in the body frame for one leg's (hip-x, hip-y) angles; points from
// hip toward foot. Nominal configuration gives (0, 0, -1).
Vec3 leg_axis(double hip_x, double hip_y) {
  double cx = std::cos(hip_x), sx = std::sin(hip_x);
  double cy = std::cos(hip_y), sy = std::sin(hip_y);
  return {-sy, sx * cy, -cx * cy};
}

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Simulator::Simulator(const terrain::Heightfield& field, const SimConfig& config)
    : field_(&field), config_(config) {
  if (!(config.dt > 0.0) || config.substeps < 1)
    throw std::invalid_argument("Simulator: dt and substeps must be positive");
  if (!(config.gravity > 0.0) || !(config.mass > 0.0))
    throw std::invalid_argument("Simulator: gravity and mass must be positive");
  reset(terrain::kPatchSize / 2.0, terrain::kPatchSize / 2.0);
}

double Simulator::ground_at(double x, double y) const {
  return terrain::sample_height_extended(*field_, x, y);
}

Vec3 Simulator::foot_world(int leg) const {
  Mat3 R = body_to_world(state_.roll, state_.pitch, state_.yaw);
  double sx = (leg < 2) ? 1.0 : -1.0;   // legs 0,1 front; 2,3 rear
  double sy = (leg % 2 == 0) ? 1.0 : -1.0;
  Vec3 hip{sx * config_.hip_offset_x, sy * config_.hip_offset_y, 0.0};
  int j = leg * kJointsPerLeg;
  double length = config_.leg_rest_length +
                  config_.knee_to_length * (state_.q[j + 2] - config_.q_nominal[j + 2]);
  Vec3 axis = leg_axis(state_.q[j], state_.q[j + 1]);
  Vec3 local = hip + axis * length;
  return state_.com_position + R.mul(local);
}

void Simulator::refresh_foot_state() {
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (state_.contact[leg]) {
      state_.foot_heights[leg] = 0.0;
    } else {
      Vec3 f = foot_world(leg);
      state_.foot_heights[leg] = f.z - ground_at(f.x, f.y);
    }
  }
  state_.terrain_height = ground_at(state_.com_position.x, state_.com_position.y);
}

void Simulator::reset(double x, double y, std::uint64_t) {
  state_ = RobotState{};
  state_.q = config_.q_nominal;
  double weight_sag = config_.mass * config_.gravity / (4.0 * config_.leg_stiffness);
  state_.com_position = {x, y, 0.0};
  state_.com_position.z = ground_at(x, y) + config_.leg_rest_length - weight_sag;
  prev_action_ = Action{};
  v_cmd_ = Vec3{};
  external_force_ = Vec3{};
  external_force_until_ = -1.0;
  airborne_ = false;
  apex_seen_ = false;
  flight_max_height_ = 0.0;
  apex_this_step_.reset();
  touchdown_this_step_.reset();
  jumps_.clear();
  current_jump_ = JumpEvent{};
  for (int leg = 0; leg < kNumLegs; ++leg) {
    Vec3 f = foot_world(leg);
    foothold_[leg] = {f.x, f.y, ground_at(f.x, f.y)};
    state_.contact[leg] = true;
    prev_free_height_[leg] = 1e9;
  }
  refresh_foot_state();
}

void Simulator::place_airborne(double x, double y, double h_above_terrain,
                               const Vec3& velocity) {
  double t = state_.time;
  state_ = RobotState{};
  state_.time = t;
  state_.q = config_.q_nominal;
  state_.com_position = {x, y, ground_at(x, y) + h_above_terrain};
  state_.com_velocity = velocity;
  prev_action_ = Action{};
  airborne_ = true;
  apex_seen_ = false;
  current_jump_ = JumpEvent{};
  current_jump_.liftoff_time = t;
  flight_max_height_ = h_above_terrain;
  prev_free_height_.fill(1e9);
  refresh_foot_state();
}

void Simulator::apply_impulse(const Vec3& impulse_ns) {
  if (!std::isfinite(impulse_ns.x) || !std::isfinite(impulse_ns.y) ||
      !std::isfinite(impulse_ns.z))
    throw std::invalid_argument("apply_impulse: non-finite impulse");
  state_.com_velocity += impulse_ns * (1.0 / config_.mass);
}

void Simulator::set_external_force(const Vec3& force_n, double until_time) {
  external_force_ = force_n;
  external_force_until_ = until_time;
}

Observation Simulator::observe() const {
  Observation o;
  int k = 0;
  o.v[k++] = v_cmd_.x;
  o.v[k++] = v_cmd_.y;
  o.v[k++] = v_cmd_.z;
  o.v[k++] = state_.angular_velocity.x;
  o.v[k++] = state_.angular_velocity.y;
  o.v[k++] = state_.angular_velocity.z;
  Mat3 R = body_to_world(state_.roll, state_.pitch, state_.yaw);
  Vec3 g_body = R.mul_transposed(Vec3{0.0, 0.0, -1.0});
  o.v[k++] = g_body.x;
  o.v[k++] = g_body.y;
  o.v[k++] = g_body.z;
  for (int i = 0; i < kNumJoints; ++i) o.v[k++] = state_.q[i];
  for (int i = 0; i < kNumJoints; ++i) o.v[k++] = state_.qd[i];
  for (int i = 0; i < kNumJoints; ++i) o.v[k++] = prev_action_.delta_q[i];
  return o;
}

Observation Simulator::step(const Action& action) {
  if (!all_finite(action.delta_q.data(), kNumJoints))
    throw std::runtime_error("Simulator::step: non-finite action at t=" +
                             std::to_string(state_.time));

  std::array<double, kNumJoints> q_target;
  Action clipped;
  for (int i = 0; i < kNumJoints; ++i) {
    clipped.delta_q[i] = std::clamp(action.delta_q[i], -kActionLimit, kActionLimit);
    q_target[i] = config_.q_nominal[i] + clipped.delta_q[i];
  }

  apex_this_step_.reset();
  touchdown_this_step_.reset();

  double h = config_.substep_dt();
  for (int s = 0; s < config_.substeps; ++s) substep(q_target, h);

  prev_action_ = clipped;

  if (!all_finite(&state_.com_position.x, 3) || !all_finite(&state_.com_velocity.x, 3) ||
      !std::isfinite(state_.roll) || !std::isfinite(state_.pitch) ||
      !std::isfinite(state_.yaw) || !all_finite(state_.q.data(), kNumJoints))
    throw std::runtime_error("Simulator::step: state diverged (NaN/Inf) at t=" +
                             std::to_string(state_.time));
  return observe();
}

void Simulator::substep(const std::array<double, kNumJoints>& q_target, double dt) {
  const double m = config_.mass;
  const double g = config_.gravity;
  Mat3 R = body_to_world(state_.roll, state_.pitch, state_.yaw);
  Vec3 omega_world = R.mul(state_.angular_velocity);

  Vec3 force{0.0, 0.0, -m * g};
  if (state_.time < external_force_until_) force += external_force_;
  Vec3 torque_world{};
  std::array<double, kNumLegs> leg_force{};  // axial spring force, for knee reaction

  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (!state_.contact[leg]) continue;
    double sx = (leg < 2) ? 1.0 : -1.0;
    double sy = (leg % 2 == 0) ? 1.0 : -1.0;
    Vec3 hip_local{sx * config_.hip_offset_x, sy * config_.hip_offset_y, 0.0};
    Vec3 lever = R.mul(hip_local);
    Vec3 hip = state_.com_position + lever;
    Vec3 to_hip = hip - foothold_[leg];
    double len = to_hip.norm();
    if (len < 1e-6) continue;
    Vec3 axis = to_hip * (1.0 / len);

    if (axis.z < 0.2) continue;  // leg buckled sideways; no useful support

    int j = leg * kJointsPerLeg;
    double len_des = config_.leg_rest_length +
                     config_.knee_to_length * (state_.q[j + 2] - config_.q_nominal[j + 2]);
    double len_des_rate = config_.knee_to_length * state_.qd[j + 2];
    Vec3 hip_vel = state_.com_velocity + omega_world.cross(lever);
    double len_rate = axis.dot(hip_vel);

    double f = config_.leg_stiffness * (len_des - len) +
               config_.leg_damping * (len_des_rate - len_rate);
    if (f <= 0.0) {
      // Slack spring. The foot stays planted while the hip approaches it
      // (crouch); it leaves the ground only once the hip is moving away.
      if (len >= len_des && len_rate > 0.0) {
        state_.contact[leg] = false;
        prev_free_height_[leg] = -1e9;  // suppress re-anchor on this substep
      }
      continue;
    }
    leg_force[leg] = f;

    Vec3 F = axis * f;
    // Coulomb limit: the ground cannot supply more tangential force than
    // friction * normal.
    double f_n = F.z;
    double f_t = std::sqrt(F.x * F.x + F.y * F.y);
    double f_t_max = config_.friction * std::max(0.0, f_n);
    if (f_t > f_t_max && f_t > 0.0) {
      double scale = f_t_max / f_t;
      F.x *= scale;
      F.y *= scale;
    }
    force += F;
    torque_world += lever.cross(F);
  }

  // World Z spin damping stands in for the uncommanded yaw DoF.
  Vec3 torque_body = R.mul_transposed(torque_world);
  torque_body.z -= config_.yaw_damping * state_.angular_velocity.z;

  // Joint dynamics: PD-tracked second-order units; the series spring reacts
  // on the knee.
  std::array<double, kNumJoints> qdd;
  for (int i = 0; i < kNumJoints; ++i) {
    double tau = config_.kp * (q_target[i] - state_.q[i]) - config_.kd * state_.qd[i];
    if (i % kJointsPerLeg == 2) tau -= config_.knee_to_length * leg_force[i / kJointsPerLeg];
    qdd[i] = tau / config_.joint_inertia;
  }

  // Rigid-body angular dynamics with diagonal inertia.
  const Vec3 I{config_.inertia_x, config_.inertia_y, config_.inertia_z};
  Vec3 Iw{I.x * state_.angular_velocity.x, I.y * state_.angular_velocity.y,
          I.z * state_.angular_velocity.z};
  Vec3 gyro = state_.angular_velocity.cross(Iw);
  Vec3 omega_dot{(torque_body.x - gyro.x) / I.x, (torque_body.y - gyro.y) / I.y,
                 (torque_body.z - gyro.z) / I.z};

  // Velocity update first, positions with the midpoint velocity: exact for
  // constant acceleration, which keeps flight-phase energy conserved to
  // roundoff.
  Vec3 accel = force * (1.0 / m);
  Vec3 v_old = state_.com_velocity;
  state_.com_velocity += accel * dt;
  state_.com_position += (v_old + state_.com_velocity) * (0.5 * dt);

  Vec3 w_old = state_.angular_velocity;
  state_.angular_velocity += omega_dot * dt;
  Vec3 w_mid = (w_old + state_.angular_velocity) * 0.5;

  double cf = std::cos(state_.roll), sf = std::sin(state_.roll);
  double ct = std::cos(state_.pitch), st = std::sin(state_.pitch);
  double tt = st / ct;
  state_.roll += dt * (w_mid.x + tt * (w_mid.y * sf + w_mid.z * cf));
  state_.pitch += dt * (w_mid.y * cf - w_mid.z * sf);
  state_.yaw += dt * ((w_mid.y * sf + w_mid.z * cf) / ct);

  for (int i = 0; i < kNumJoints; ++i) {
    double qd_old = state_.qd[i];
    state_.qd[i] += qdd[i] * dt;
    state_.q[i] += 0.5 * (qd_old + state_.qd[i]) * dt;
  }

  double v_z_impact = state_.com_velocity.z;
  state_.time += dt;

  // Contact events.
  bool was_airborne = !state_.any_contact();
  bool new_touchdown = false;
  double touchdown_frac = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (state_.contact[leg]) continue;
    Vec3 f = foot_world(leg);
    double h_f = f.z - ground_at(f.x, f.y);
    double h_prev = prev_free_height_[leg];
    prev_free_height_[leg] = h_f;
    // Anchor on a descending crossing, or whenever penetration exceeds a few
    // millimeters (a foot released below a rough surface, or swept sideways
    // into rising ground).
    if ((h_f <= 0.0 && h_f < h_prev) || h_f < -0.003) {
      foothold_[leg] = {f.x, f.y, ground_at(f.x, f.y)};
      state_.contact[leg] = true;
      if (!new_touchdown && h_prev < 1e8 && h_prev > 0.0) {
        touchdown_frac = h_prev / (h_prev - h_f);  // crossing inside this substep
        new_touchdown = true;
      }
    }
  }

  if (was_airborne && state_.any_contact()) {
    // Inelastic vertical impact.
    state_.com_velocity.z = 0.0;
    if (airborne_) {
      current_jump_.touchdown_time =
          new_touchdown ? state_.time - dt + touchdown_frac * dt : state_.time;
      current_jump_.touchdown_speed = std::abs(v_z_impact);
      current_jump_.touchdown_roll = state_.roll;
      current_jump_.touchdown_pitch = state_.pitch;
      current_jump_.complete = true;
      jumps_.push_back(current_jump_);
      touchdown_this_step_ = current_jump_;
    }
    airborne_ = false;
    apex_seen_ = false;
  } else if (!state_.any_contact()) {
    refresh_foot_state();
    double h_above = state_.height_above_terrain();
    if (!airborne_) {
      airborne_ = true;
      apex_seen_ = false;
      current_jump_ = JumpEvent{};
      current_jump_.liftoff_time = state_.time;
      flight_max_height_ = h_above;
    }
    flight_max_height_ = std::max(flight_max_height_, h_above);
    if (!apex_seen_ && v_old.z > 0.0 && state_.com_velocity.z <= 0.0) {
      // First downward crossing of v_z within this flight.
      apex_seen_ = true;
      current_jump_.apex_height = flight_max_height_;
      current_jump_.apex_time = state_.time;
      apex_this_step_ = flight_max_height_;
    }
  }

  refresh_foot_state();
}

// ---------------------------------------------------------------------------
// Scripted pronk controller
// ---------------------------------------------------------------------------

ScriptedPronk::ScriptedPronk(const Target& target, const SimConfig& config)
    : target_(target), config_(config), params_() {}

ScriptedPronk::ScriptedPronk(const Target& target, const SimConfig& config,
                             const Params& params)
    : target_(target), config_(config), params_(params) {}

void ScriptedPronk::reset() {
  phase_ = Phase::Settle;
  crouch_cmd_ = 0.0;
  steps_in_phase_ = 0;
}

void ScriptedPronk::enter(Phase p) {
  phase_ = p;
  steps_in_phase_ = 0;
}

Action ScriptedPronk::act(const RobotState& state) {
  double mean_knee = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg)
    mean_knee += state.q[leg * kJointsPerLeg + 2] - config_.q_nominal[leg * kJointsPerLeg + 2];
  mean_knee /= kNumLegs;

  ++steps_in_phase_;
  double time_in_phase = steps_in_phase_ * config_.dt;

  if (state.any_contact()) {
    switch (phase_) {
      case Phase::Settle:
      case Phase::Ascend:
      case Phase::Descend:
        enter(Phase::Crouch);
        crouch_cmd_ = std::max(mean_knee, 0.0);
        break;
      case Phase::Crouch:
        if ((crouch_cmd_ <= params_.crouch_knee && mean_knee <= params_.crouch_knee + 0.15) ||
            time_in_phase > 1.5)
          enter(Phase::Push);
        break;
      case Phase::Push:
        // A push that has not produced liftoff has stalled (e.g. the body
        // slid sideways and bled the extension); re-crouch and retry.
        if (time_in_phase > 0.6) {
          enter(Phase::Crouch);
          crouch_cmd_ = std::max(mean_knee, 0.0);
        }
        break;
    }
  } else {
    Phase next = state.com_velocity.z > 0.0 ? Phase::Ascend : Phase::Descend;
    if (next != phase_) enter(next);
  }

  // Foot placement is the only horizontal control authority: an anchored
  // foot ahead of the hip brakes, behind it accelerates. Hip targets of
  // anchored legs only matter once the leg releases.
  double v_x = state.com_velocity.x;
  double hip_pitch = std::clamp(
      -(params_.placement_gain * v_x + params_.placement_corr * (v_x - target_.v_x_cmd)),
      -params_.placement_limit, params_.placement_limit);

  double knee = 0.0;
  bool reflex = false;
  switch (phase_) {
    case Phase::Settle:
      break;
    case Phase::Crouch:
      // Ramped target keeps the springs loaded on the way down, so the
      // stance keeps righting the body instead of free-falling.
      crouch_cmd_ = std::max(params_.crouch_knee, crouch_cmd_ - params_.crouch_rate * config_.dt);
      knee = crouch_cmd_;
      reflex = true;
      break;
    case Phase::Push:
      knee = params_.push_knee;
      reflex = true;
      break;
    case Phase::Ascend:
    case Phase::Descend:
      knee = phase_ == Phase::Ascend ? params_.retract_knee : params_.land_knee;
      reflex = phase_ == Phase::Descend;  // pre-shape legs for touchdown
      break;
  }

  double sr = std::sin(state.roll), cr = std::cos(state.roll);
  double sp = std::sin(state.pitch), cp = std::cos(state.pitch);
  Action a;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    int j = leg * kJointsPerLeg;
    a.delta_q[j] = 0.0;
    a.delta_q[j + 1] = hip_pitch;
    double adjust = 0.0;
    if (reflex) {
      // Leveling reflex: extend the knees whose hip has dropped, with a
      // damping term on the hip vertical rate.
      double rx = (leg < 2 ? 1.0 : -1.0) * config_.hip_offset_x;
      double ry = (leg % 2 == 0 ? 1.0 : -1.0) * config_.hip_offset_y;
      double hip_drop = -sp * rx + cp * sr * ry;
      double hip_drop_rate = state.angular_velocity.x * ry - state.angular_velocity.y * rx;
      adjust = -(params_.level_gain * hip_drop + params_.level_damping * hip_drop_rate) /
               config_.knee_to_length;
      adjust = std::clamp(adjust, -params_.reflex_limit, params_.reflex_limit);
      (void)cr;
    }
    a.delta_q[j + 2] = knee + adjust;
  }
  return a;
}

double measure_flat_apex(const ScriptedPronk::Target& target, const SimConfig& config,
                         const ScriptedPronk::Params& params) {
  terrain::Spec flat;
  flat.category = terrain::Category::PureFlat;
  terrain::Heightfield field = terrain::generate_patch(flat, 0.5, Exec::Serial);
  Simulator simulator(field, config);
  simulator.reset(terrain::kPatchSize / 2.0, terrain::kPatchSize / 2.0);
  simulator.set_command_velocity({target.v_x_cmd, 0.0, 0.0});
  ScriptedPronk controller(target, config, params);

  int max_steps = static_cast<int>(16.0 / config.dt);
  double apex = 0.0;
  int jumps_seen = 0;
  for (int i = 0; i < max_steps; ++i) {
    simulator.step(controller.act(simulator.state()));
    if (simulator.touchdown_this_step()) {
      const JumpEvent& jump = *simulator.touchdown_this_step();
      // Ignore contact chatter; only full flights count toward calibration.
      if (jump.touchdown_time - jump.liftoff_time > 0.3) {
        ++jumps_seen;
        apex = jump.apex_height;
        if (jumps_seen >= 3) break;  // steady state
      }
    }
  }
  return apex;
}

ScriptedPronk::Params ScriptedPronk::calibrate(const Target& target,
                                               const SimConfig& config, double tol) {
  Params params;
  double lo = 0.02, hi = kActionLimit;
  for (int iter = 0; iter < 40; ++iter) {
    params.push_knee = 0.5 * (lo + hi);
    double apex = measure_flat_apex(target, config, params);
    double err = apex - target.h_cmd;
    if (std::abs(err) <= tol) break;
    if (err > 0.0)
      hi = params.push_knee;
    else
      lo = params.push_knee;
  }
  return params;
}

}  // namespace lhop::sim
