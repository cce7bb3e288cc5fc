#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lhop/terrain.hpp"

namespace lhop::sim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const;
};

inline constexpr int kNumLegs = 4;
inline constexpr int kJointsPerLeg = 3;  // hip-x (abduction), hip-y (pitch), knee
inline constexpr int kNumJoints = kNumLegs * kJointsPerLeg;
inline constexpr int kObservationDim = 45;

/// Joint position increments relative to the nominal configuration, clipped
/// to [-kActionLimit, kActionLimit] per component.
struct Action {
  std::array<double, kNumJoints> delta_q{};
};

inline constexpr double kActionLimit = 0.8;  // rad

struct RobotState {
  Vec3 com_position;
  Vec3 com_velocity;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  Vec3 angular_velocity;  // body frame
  std::array<double, kNumJoints> q{};
  std::array<double, kNumJoints> qd{};
  std::array<bool, kNumLegs> contact{};
  std::array<double, kNumLegs> foot_heights{};  // above local terrain
  double terrain_height = 0.0;  // terrain under the CoM
  double time = 0.0;

  bool any_contact() const {
    return contact[0] || contact[1] || contact[2] || contact[3];
  }
  /// CoM height above the terrain directly underneath.
  double height_above_terrain() const { return com_position.z - terrain_height; }
};

/// The 45-dim proprioceptive vector: [v_cmd(3), omega(3), gravity_dir(3),
/// q(12), qd(12), prev_action(12)]. gravity_dir is the unit gravity direction
/// expressed in the body frame.
struct Observation {
  std::array<double, kObservationDim> v{};

  double operator[](int i) const { return v[i]; }
};

struct SimConfig {
  double gravity = 1.62;      // m/s^2
  double dt = 0.02;           // control period (50 Hz)
  int substeps = 10;          // physics substeps per control period
  double mass = 12.5;         // kg
  double inertia_x = 0.12;    // body roll inertia, kg m^2
  double inertia_y = 0.28;    // body pitch inertia
  double inertia_z = 0.35;    // body yaw inertia
  double kp = 20.0;           // joint PD gains
  double kd = 0.5;
  double joint_inertia = 0.02;
  double leg_stiffness = 250.0;  // N/m; ~2 cm standing compression at lunar g
  double leg_damping = 60.0;     // N s/m, near critical for one leg
  double knee_to_length = 0.15;   // m of leg length per rad of knee angle
  double leg_rest_length = 0.30;  // m at nominal knee angle
  double hip_offset_x = 0.18;     // m, fore/aft hip placement
  double hip_offset_y = 0.13;     // m, lateral hip placement
  double friction = 0.7;
  double yaw_damping = 2.0;       // N m s, pronk has no yaw command
  std::array<double, kNumJoints> q_nominal{};  // all zeros by default

  double substep_dt() const { return dt / substeps; }
  /// Standing CoM height at the nominal configuration.
  double h_stance() const { return leg_rest_length; }
};

/// One liftoff-flight-touchdown record, assembled by the simulator.
struct JumpEvent {
  double liftoff_time = 0.0;
  double touchdown_time = 0.0;       // sub-step interpolated
  double apex_height = 0.0;          // max CoM height above terrain while airborne
  double apex_time = 0.0;
  double touchdown_speed = 0.0;      // |v_z| just before the inelastic impact
  double touchdown_roll = 0.0;
  double touchdown_pitch = 0.0;
  bool complete = false;
};

/// Reduced-order pronking quadruped over a heightfield: rigid CoM body plus
/// four massless telescoping legs. Joints are PD-tracked second-order units;
/// knee extension maps to leg length through a series spring that produces
/// the stance force on the body. Flight is ballistic; touchdown is an
/// inelastic vertical impact with Coulomb-limited horizontal force. One
/// instance is single-threaded; independent instances may run in parallel.
class Simulator {
 public:
  Simulator(const terrain::Heightfield& field, const SimConfig& config);

  /// Places the robot standing at (x, y) on the terrain, all feet in contact.
  void reset(double x, double y, std::uint64_t = 0);

  /// Places the robot mid-air at the given height above terrain with the
  /// given velocity; starts a fresh flight record.
  void place_airborne(double x, double y, double h_above_terrain, const Vec3& velocity);

  /// Advances one control period and returns the observation for the new
  /// state. Throws std::runtime_error on non-finite state or action.
  Observation step(const Action& action);

  /// Instantaneous momentum change: com_velocity += impulse / mass.
  void apply_impulse(const Vec3& impulse_ns);

  /// Constant external force applied until the given simulation time.
  void set_external_force(const Vec3& force_n, double until_time);

  void set_command_velocity(const Vec3& v_cmd) { v_cmd_ = v_cmd; }

  const RobotState& state() const { return state_; }
  const SimConfig& config() const { return config_; }
  Observation observe() const;

  /// Apex event detected during the most recent step(), if any.
  const std::optional<double>& apex_this_step() const { return apex_this_step_; }
  /// Touchdown event detected during the most recent step(), if any.
  const std::optional<JumpEvent>& touchdown_this_step() const {
    return touchdown_this_step_;
  }
  const std::vector<JumpEvent>& jumps() const { return jumps_; }
  const Action& previous_action() const { return prev_action_; }

 private:
  void substep(const std::array<double, kNumJoints>& q_target, double dt);
  double ground_at(double x, double y) const;
  Vec3 foot_world(int leg) const;
  void refresh_foot_state();

  terrain::Heightfield const* field_;
  SimConfig config_;
  RobotState state_;
  Vec3 v_cmd_;
  Action prev_action_{};
  std::array<Vec3, kNumLegs> foothold_{};  // world anchor while in contact
  std::array<double, kNumLegs> prev_free_height_{};
  Vec3 external_force_;
  double external_force_until_ = -1.0;

  bool airborne_ = false;
  JumpEvent current_jump_{};
  bool apex_seen_ = false;
  double flight_max_height_ = 0.0;
  std::optional<double> apex_this_step_;
  std::optional<JumpEvent> touchdown_this_step_;
  std::vector<JumpEvent> jumps_;
};

/// Crouch-push-retract jump cycle with Raibert-style foot placement for
/// forward-speed tracking. Deterministic given the state stream; the push
/// amplitude is calibrated per gravity level with calibrate().
class ScriptedPronk {
 public:
  struct Params {
    double crouch_knee = -0.45;   // rad, crouch target
    double push_knee = 0.55;      // rad, calibrated against h_cmd
    double retract_knee = -0.25;  // rad while ascending
    double land_knee = 0.0;       // rad while descending
    // Raibert placement: feet land ahead of the hip by roughly v * T_st / 2,
    // plus a correction toward the commanded speed.
    double placement_gain = 0.65;  // rad per m/s of carried speed
    double placement_corr = 0.15;  // rad per m/s of speed error
    double placement_limit = 0.45; // rad
    double settle_speed = 0.25;    // m/s, |v_z| below which crouch may start
    double crouch_rate = 1.5;     // rad/s; ramped so the legs stay loaded
    double level_gain = 0.9;      // balance reflex: extension per m of hip drop
    double level_damping = 0.12;  // reflex damping on the hip vertical rate
    double reflex_limit = 0.3;    // rad of per-leg knee adjustment
  };

  struct Target {
    double h_cmd = 0.6;    // commanded apex height above terrain, m
    double v_x_cmd = 0.0;  // commanded forward speed, m/s
  };

  ScriptedPronk(const Target& target, const SimConfig& config);
  ScriptedPronk(const Target& target, const SimConfig& config, const Params& params);

  Action act(const RobotState& state);
  void reset();

  const Params& params() const { return params_; }

  /// Bisects the push amplitude on flat ground until the steady-state jump
  /// apex is within tol of target.h_cmd. Deterministic.
  static Params calibrate(const Target& target, const SimConfig& config,
                          double tol = 0.005);

 private:
  enum class Phase { Settle, Crouch, Push, Ascend, Descend };
  void enter(Phase p);
  Target target_;
  SimConfig config_;
  Params params_;
  Phase phase_ = Phase::Settle;
  double crouch_cmd_ = 0.0;
  int steps_in_phase_ = 0;
};

/// Steady-state apex height above terrain for the given controller on flat
/// ground; used by the calibration and its tests.
double measure_flat_apex(const ScriptedPronk::Target& target, const SimConfig& config,
                         const ScriptedPronk::Params& params);

}  // namespace lhop::sim
