#include "lhop/twin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lhop/rng.hpp"

namespace lhop::twin {

Vec3 fit_plane_normal(const RaycastProbe& probe) {
  for (double h : probe.heights)
    if (!std::isfinite(h)) throw std::invalid_argument("fit_plane_normal: non-finite height");

  // Least squares for z = a x + b y + c over the four points, then
  // n = (-a, -b, 1) normalized.
  double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, n = 4;
  double sxz = 0, syz = 0, sz = 0;
  for (int i = 0; i < 4; ++i) {
    double x = probe.offset_x[i], y = probe.offset_y[i], z = probe.heights[i];
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    sx += x;
    sy += y;
    sxz += x * z;
    syz += y * z;
    sz += z;
  }
  // Solve the 3x3 normal equations by Cramer's rule.
  double m[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, n}};
  double rhs[3] = {sxz, syz, sz};
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  double det = det3(m);
  if (std::abs(det) < 1e-12)
    throw std::invalid_argument("fit_plane_normal: degenerate probe geometry");
  double sol[2];
  for (int k = 0; k < 2; ++k) {
    double mk[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) mk[r][c] = c == k ? rhs[r] : m[r][c];
    sol[k] = det3(mk) / det;
  }
  double a = sol[0], b = sol[1];
  double norm = std::sqrt(a * a + b * b + 1.0);
  return {-a / norm, -b / norm, 1.0 / norm};
}

TiltAngles tilt_angles(const Vec3& normal, double platform_limit_rad) {
  double norm = std::sqrt(normal.x * normal.x + normal.y * normal.y + normal.z * normal.z);
  if (norm < 1e-12) throw std::invalid_argument("tilt_angles: zero-norm normal");
  double nx = normal.x / norm, ny = normal.y / norm, nz = normal.z / norm;
  TiltAngles t;
  t.phi = std::atan2(ny, nz);
  t.theta = std::atan2(-nx, std::sqrt(ny * ny + nz * nz));
  double phi_c = std::clamp(t.phi, -platform_limit_rad, platform_limit_rad);
  double theta_c = std::clamp(t.theta, -platform_limit_rad, platform_limit_rad);
  t.saturated = phi_c != t.phi || theta_c != t.theta;
  t.phi = phi_c;
  t.theta = theta_c;
  return t;
}

double TreadmillFilter::tick(double forward_velocity, double dt) {
  double target = std::max(0.0, forward_velocity);
  double alpha = 1.0 - std::exp(-dt / tau_);
  value_ += alpha * (target - value_);
  value_ = std::max(0.0, value_);
  return value_;
}

double effective_gravity(const OffloadModel& model) {
  if (!(model.robot_mass > 0.0) || model.counterweight_mass < 0.0)
    throw std::invalid_argument("effective_gravity: masses must be positive");
  double offload = model.pulley_advantage * model.counterweight_mass * model.g_earth;
  double g_eff = model.g_earth - offload / model.robot_mass;
  if (g_eff < 0.0)
    throw std::domain_error("effective_gravity: offload exceeds robot weight");
  return g_eff;
}

DisturbancePlan::DisturbancePlan(const DisturbanceModel& model, std::uint64_t episode_seed)
    : model_(model), seed_(episode_seed) {
  if (model.g_min > model.g_max)
    throw std::invalid_argument("DisturbancePlan: g_min > g_max");
  Rng rng(Rng::derive(episode_seed, 0));
  g_episode_ = rng.uniform(model.g_min, model.g_max);
}

Impulse DisturbancePlan::on_phase_entry(bool takeoff) {
  if ((takeoff && !model_.on_takeoff) || (!takeoff && !model_.on_landing)) return {};
  Rng rng(Rng::derive(seed_, 1 + draws_++));
  double magnitude = rng.uniform(model_.impulse_min_ns, model_.impulse_max_ns);
  Impulse imp;
  imp.impulse_ns = {0.0, 0.0, -magnitude};
  imp.duration_s = model_.impulse_duration_s;
  return imp;
}

TwinMapper::TwinMapper(const TwinConfig& config)
    : config_(config), filter_(config.treadmill_tau) {}

void TwinMapper::reset() {
  filter_.reset();
  has_previous_ = false;
  previous_ = TwinCommand{};
}

TwinCommand TwinMapper::tick(const sim::RobotState& state,
                             const terrain::Heightfield& field) {
  RaycastProbe probe = config_.probe_offsets;
  double cy = std::cos(state.yaw), sy = std::sin(state.yaw);
  for (int i = 0; i < 4; ++i) {
    double wx = state.com_position.x + cy * probe.offset_x[i] - sy * probe.offset_y[i];
    double wy = state.com_position.y + sy * probe.offset_x[i] + cy * probe.offset_y[i];
    probe.heights[i] = terrain::sample_height(field, wx, wy);
  }
  TiltAngles tilt = tilt_angles(fit_plane_normal(probe), config_.platform_limit_rad);

  TwinCommand cmd;
  cmd.time = state.time;
  cmd.phi = tilt.phi;
  cmd.theta = tilt.theta;
  cmd.saturated = tilt.saturated;
  if (has_previous_) {
    double max_step = config_.tilt_rate_limit * config_.dt;
    double dphi = std::clamp(cmd.phi - previous_.phi, -max_step, max_step);
    double dtheta = std::clamp(cmd.theta - previous_.theta, -max_step, max_step);
    if (dphi != cmd.phi - previous_.phi || dtheta != cmd.theta - previous_.theta)
      cmd.saturated = true;
    cmd.phi = previous_.phi + dphi;
    cmd.theta = previous_.theta + dtheta;
  }
  cmd.treadmill_speed = filter_.tick(state.com_velocity.x, config_.dt);
  previous_ = cmd;
  has_previous_ = true;
  return cmd;
}

void write_commands(const std::vector<TwinCommand>& commands, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_commands: cannot open " + path);
  out << "t,phi_deg,theta_deg,speed_mps\n";
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  char line[128];
  for (const auto& c : commands) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f\n", c.time, c.phi * kDeg,
                  c.theta * kDeg, c.treadmill_speed);
    out << line;
  }
}

std::vector<TwinCommand> read_commands(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_commands: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  std::vector<TwinCommand> commands;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TwinCommand c;
    double phi_deg = 0, theta_deg = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &c.time, &phi_deg, &theta_deg,
                    &c.treadmill_speed) != 4)
      throw std::runtime_error("read_commands: malformed line: " + line);
    c.phi = phi_deg * kRad;
    c.theta = theta_deg * kRad;
    commands.push_back(c);
  }
  return commands;
}

CommandCheck check_commands(const std::vector<TwinCommand>& commands,
                            const TwinConfig& config) {
  CommandCheck result;
  std::ostringstream msg;
  const double limit = config.platform_limit_rad + 1e-9;
  const double rate = config.tilt_rate_limit;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& c = commands[i];
    if (std::abs(c.phi) > limit || std::abs(c.theta) > limit) {
      ++result.violations;
      msg << "tilt limit exceeded at t=" << c.time << "\n";
    }
    if (c.treadmill_speed < 0.0) {
      ++result.violations;
      msg << "negative treadmill speed at t=" << c.time << "\n";
    }
    if (i > 0) {
      double dt = c.time - commands[i - 1].time;
      if (dt <= 0.0) {
        ++result.violations;
        msg << "non-monotone time at t=" << c.time << "\n";
      } else {
        // Degree-rounded files give a little slack on the rate check.
        double tol = rate * dt + 1e-6;
        if (std::abs(c.phi - commands[i - 1].phi) > tol ||
            std::abs(c.theta - commands[i - 1].theta) > tol) {
          ++result.violations;
          msg << "tilt rate limit exceeded at t=" << c.time << "\n";
        }
      }
    }
  }
  result.ok = result.violations == 0;
  result.message = msg.str();
  return result;
}

}  // namespace lhop::twin
