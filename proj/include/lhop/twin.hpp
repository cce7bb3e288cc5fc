#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lhop/sim.hpp"
#include "lhop/terrain.hpp"

namespace lhop::twin {

/// Four downward probes at fixed body-frame offsets (front, back, left,
/// right) with the terrain heights they returned.
struct RaycastProbe {
  std::array<double, 4> offset_x{0.2, -0.2, 0.0, 0.0};
  std::array<double, 4> offset_y{0.0, 0.0, 0.15, -0.15};
  std::array<double, 4> heights{};
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Least-squares plane through the four probe points; returns the unit normal
/// with positive z. Throws std::invalid_argument for degenerate probe
/// geometry or non-finite heights.
Vec3 fit_plane_normal(const RaycastProbe& probe);

struct TiltAngles {
  double phi = 0.0;    // roll, rad
  double theta = 0.0;  // pitch, rad
  bool saturated = false;
};

/// phi = atan2(n_y, n_z), theta = atan2(-n_x, sqrt(n_y^2 + n_z^2)), clamped
/// to the platform limit with a saturation flag. Throws on zero-norm input.
TiltAngles tilt_angles(const Vec3& normal, double platform_limit_rad = 0.35);

/// First-order low-pass on the robot's forward speed, clamped at zero. The
/// discrete update uses the exact exponential step.
class TreadmillFilter {
 public:
  explicit TreadmillFilter(double time_constant_s = 0.2) : tau_(time_constant_s) {}
  double tick(double forward_velocity, double dt);
  double value() const { return value_; }
  void reset(double v = 0.0) { value_ = v; }

 private:
  double tau_;
  double value_ = 0.0;
};

/// Pulley-counterweight gravity offload: a counterweight of mass m_cw acting
/// through a 2:1 block applies 2 * m_cw * g_earth upward.
struct OffloadModel {
  double robot_mass = 12.5;          // kg
  double counterweight_mass = 12.5 * 5.0 / 12.0;
  double g_earth = 9.81;
  double pulley_advantage = 2.0;
  double tension_noise_kg = 1.2;     // equivalent-mass fluctuation amplitude
};

/// g_eff = g_earth - advantage * m_cw * g_earth / m. Throws std::domain_error
/// if the offload exceeds the robot's weight.
double effective_gravity(const OffloadModel& model);

struct DisturbanceModel {
  double g_min = 0.8 * 1.62;
  double g_max = 1.2 * 1.62;
  double impulse_min_ns = 0.0;   // downward impulse magnitude range
  double impulse_max_ns = 0.5;
  double impulse_duration_s = 0.04;
  bool on_takeoff = true;
  bool on_landing = true;
};

struct Impulse {
  sim::Vec3 impulse_ns;  // downward
  double duration_s = 0.0;
};

/// Episode draw: gravity fixed for the episode, plus a deterministic stream
/// of impulse magnitudes consumed as takeoff/landing phase entries occur.
class DisturbancePlan {
 public:
  DisturbancePlan(const DisturbanceModel& model, std::uint64_t episode_seed);

  double episode_gravity() const { return g_episode_; }
  /// Next armed impulse for a phase-entry event (kind: true = takeoff).
  Impulse on_phase_entry(bool takeoff);

 private:
  DisturbanceModel model_;
  double g_episode_;
  std::uint64_t draws_ = 0;
  std::uint64_t seed_;
};

struct TwinCommand {
  double time = 0.0;
  double phi = 0.0;              // rad
  double theta = 0.0;            // rad
  double treadmill_speed = 0.0;  // m/s
  bool saturated = false;
};

struct TwinConfig {
  RaycastProbe probe_offsets;
  double platform_limit_rad = 0.35;
  double tilt_rate_limit = 30.0 * 3.14159265358979323846 / 180.0;  // rad/s
  double treadmill_tau = 0.2;
  double dt = 0.02;
};

/// The per-tick digital-twin mapping: probe the terrain under the robot, fit
/// the plane, compute tilt, rate-limit against the previous command, and
/// filter the treadmill speed. Holds the filter/rate state between ticks; the
/// geometric core stays in the free functions above.
class TwinMapper {
 public:
  explicit TwinMapper(const TwinConfig& config = {});
  TwinCommand tick(const sim::RobotState& state, const terrain::Heightfield& field);
  void reset();

 private:
  TwinConfig config_;
  TreadmillFilter filter_;
  TwinCommand previous_;
  bool has_previous_ = false;
};

/// Newline-delimited command records "t,phi_deg,theta_deg,speed_mps" with six
/// decimal places, for replay and diffing.
void write_commands(const std::vector<TwinCommand>& commands, const std::string& path);
std::vector<TwinCommand> read_commands(const std::string& path);

struct CommandCheck {
  bool ok = true;
  std::size_t violations = 0;
  std::string message;
};

/// Validates tilt limits, non-negative speed, monotone time and the tilt
/// rate limit of a recorded command stream.
CommandCheck check_commands(const std::vector<TwinCommand>& commands,
                            const TwinConfig& config = {});

}  // namespace lhop::twin
