#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>

#include "lhop/rng.hpp"
#include "lhop/twin.hpp"

using namespace lhop;
using namespace lhop::twin;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Platform tilt convention: roll phi about x then pitch theta about y map the
// vertical to n = (-sin(theta), cos(theta) sin(phi), cos(theta) cos(phi)).
Vec3 tilted_normal(double phi, double theta) {
  return {-std::sin(theta), std::cos(theta) * std::sin(phi),
          std::cos(theta) * std::cos(phi)};
}
}  // namespace

TEST_CASE("plane fit: horizontal, analytic slope, coplanar residual") {
  RaycastProbe probe;
  probe.heights = {0.3, 0.3, 0.3, 0.3};
  Vec3 n = fit_plane_normal(probe);
  CHECK(n.x == doctest::Approx(0.0));
  CHECK(n.y == doctest::Approx(0.0));
  CHECK(n.z == doctest::Approx(1.0));

  // Heights from the plane z = x * tan(10 deg).
  double slope = std::tan(10.0 * kPi / 180.0);
  for (int i = 0; i < 4; ++i) probe.heights[i] = probe.offset_x[i] * slope;
  n = fit_plane_normal(probe);
  CHECK(n.x == doctest::Approx(-std::sin(10.0 * kPi / 180.0)).epsilon(1e-9));
  CHECK(n.y == doctest::Approx(0.0));
  CHECK(n.z == doctest::Approx(std::cos(10.0 * kPi / 180.0)).epsilon(1e-9));

  // Any four coplanar points reproduce their plane exactly.
  for (int i = 0; i < 4; ++i)
    probe.heights[i] = 0.17 + 0.3 * probe.offset_x[i] - 0.12 * probe.offset_y[i];
  n = fit_plane_normal(probe);
  double a = -n.x / n.z, b = -n.y / n.z;
  CHECK(a == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(b == doctest::Approx(-0.12).epsilon(1e-9));

  RaycastProbe degenerate;
  degenerate.offset_x = {0.0, 0.0, 0.0, 0.0};
  degenerate.offset_y = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(fit_plane_normal(degenerate), std::invalid_argument);
}

TEST_CASE("tilt angles: basic values and saturation flag") {
  TiltAngles t = tilt_angles({0.0, 0.0, 1.0});
  CHECK(t.phi == 0.0);
  CHECK(t.theta == 0.0);
  CHECK_FALSE(t.saturated);

  double alpha = 0.2;
  t = tilt_angles({0.0, std::sin(alpha), std::cos(alpha)});
  CHECK(t.phi == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(t.theta == doctest::Approx(0.0));

  t = tilt_angles({0.0, std::sin(0.6), std::cos(0.6)}, 0.35);
  CHECK(t.saturated);
  CHECK(t.phi == doctest::Approx(0.35));

  CHECK_THROWS_AS(tilt_angles({0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("tilt round trip over random angles") {
  Rng rng(2025);
  double limit = 60.0 * kPi / 180.0;
  for (int i = 0; i < 1000; ++i) {
    double phi = rng.uniform(-limit, limit);
    double theta = rng.uniform(-limit, limit);
    TiltAngles t = tilt_angles(tilted_normal(phi, theta), 10.0);
    CHECK(std::abs(t.phi - phi) < 1e-9);
    CHECK(std::abs(t.theta - theta) < 1e-9);
  }
}

TEST_CASE("treadmill filter: steady state, zero, step response") {
  TreadmillFilter filter(0.2);
  for (int i = 0; i < 2000; ++i) filter.tick(0.5, 0.02);
  CHECK(filter.value() == doctest::Approx(0.5).epsilon(1e-9));

  filter.reset();
  CHECK(filter.tick(0.0, 0.02) == 0.0);
  CHECK(filter.tick(-1.0, 0.02) == 0.0);  // clamped at zero

  filter.reset();
  for (int i = 0; i < 10; ++i) filter.tick(0.7, 0.02);  // one time constant
  CHECK(filter.value() == doctest::Approx(0.7 * (1.0 - std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("effective gravity: exact offload identity") {
  OffloadModel model;
  model.robot_mass = 12.5;
  model.counterweight_mass = 12.5 * 5.0 / 12.0;
  double g_eff = effective_gravity(model);
  CHECK(std::abs(g_eff - 9.81 / 6.0) / (9.81 / 6.0) < 1e-12);

  model.counterweight_mass = 0.0;
  CHECK(effective_gravity(model) == doctest::Approx(9.81));

  model.counterweight_mass = 12.5 / 2.0;
  CHECK(effective_gravity(model) == doctest::Approx(0.0));

  model.counterweight_mass = 12.5;  // offload would exceed weight
  CHECK_THROWS_AS(effective_gravity(model), std::domain_error);
}

TEST_CASE("disturbance plan: degenerate and uniform gravity draws") {
  DisturbanceModel model;
  model.g_min = model.g_max = 1.62;
  for (std::uint64_t s = 0; s < 32; ++s)
    CHECK(DisturbancePlan(model, s).episode_gravity() == 1.62);

  model.g_min = 1.30;
  model.g_max = 1.95;
  double lo = 1e9, hi = -1e9, sum = 0.0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    double g = DisturbancePlan(model, std::uint64_t(s)).episode_gravity();
    lo = std::min(lo, g);
    hi = std::max(hi, g);
    sum += g;
  }
  CHECK(lo >= model.g_min);
  CHECK(hi <= model.g_max);
  CHECK(std::abs(sum / n - 1.625) < 0.02 * 1.625);

  // Tension amplitude of 1.2 kg on a 12.5 kg robot is a ~0.94 m/s^2
  // equivalent-gravity perturbation.
  OffloadModel offload;
  double perturbation = offload.tension_noise_kg / offload.robot_mass * offload.g_earth;
  CHECK(perturbation == doctest::Approx(0.94176));

  DisturbancePlan plan(model, 5);
  Impulse a = plan.on_phase_entry(true);
  CHECK(a.impulse_ns.z <= 0.0);
  CHECK(a.duration_s == doctest::Approx(0.04));
  // The same episode seed reproduces the same impulse stream.
  DisturbancePlan plan2(model, 5);
  Impulse b = plan2.on_phase_entry(true);
  CHECK(a.impulse_ns.z == b.impulse_ns.z);
}

TEST_CASE("twin tick on flat and sloped terrain") {
  using namespace lhop::terrain;
  TwinConfig config;

  Spec flat_spec = make_spec(Category::PureFlat, 0.0, 1);
  Heightfield flat = generate_patch(flat_spec, 0.1);
  sim::RobotState state;
  state.com_position = {4.0, 4.0, 0.4};
  state.com_velocity = {0.5, 0.0, 0.0};
  TwinMapper mapper(config);
  TwinCommand cmd = mapper.tick(state, flat);
  CHECK(cmd.phi == doctest::Approx(0.0));
  CHECK(cmd.theta == doctest::Approx(0.0));
  CHECK(cmd.treadmill_speed > 0.0);

  // 10 degree slope ascended head-on: theta recovers the slope within 0.5 deg
  // once the rate limiter has converged.
  Spec slope_spec = make_spec(Category::SmoothSlope, 0.5, 1);
  Heightfield slope = generate_patch(slope_spec, 0.05);
  TwinMapper mapper2(config);
  TwinCommand slope_cmd{};
  for (int i = 0; i < 100; ++i) {
    state.time = i * 0.02;
    slope_cmd = mapper2.tick(state, slope);
  }
  CHECK(std::abs(slope_cmd.theta - 10.0 * kPi / 180.0) < 0.5 * kPi / 180.0);
  CHECK(std::abs(slope_cmd.phi) < 0.5 * kPi / 180.0);
}

TEST_CASE("command file round trip and validation") {
  std::vector<TwinCommand> commands;
  TwinConfig config;
  for (int i = 0; i < 50; ++i) {
    TwinCommand c;
    c.time = i * 0.02;
    c.phi = 0.1 * std::sin(i * 0.05);
    c.theta = 0.05 * std::cos(i * 0.05);
    c.treadmill_speed = 0.5;
    commands.push_back(c);
  }
  auto path = std::filesystem::temp_directory_path() / "lhop_test_commands.csv";
  write_commands(commands, path.string());
  auto loaded = read_commands(path.string());
  REQUIRE(loaded.size() == commands.size());
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CHECK(loaded[i].time == doctest::Approx(commands[i].time));
    CHECK(loaded[i].phi == doctest::Approx(commands[i].phi).epsilon(1e-6));
  }
  CHECK(check_commands(loaded, config).ok);

  loaded[10].phi = 1.0;  // beyond the platform limit
  CommandCheck check = check_commands(loaded, config);
  CHECK_FALSE(check.ok);
  CHECK(check.violations > 0);
  std::filesystem::remove(path);
}
