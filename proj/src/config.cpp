#include "lhop/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lhop::config {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  auto end = s.find_last_not_of(" \t\r");
  return begin == std::string::npos ? "" : s.substr(begin, end - begin + 1);
}

}  // namespace

File File::from_string(const std::string& text) {
  File file;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' on line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: empty key on line " + std::to_string(lineno));
    file.values_[key] = value;
  }
  return file;
}

File File::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

bool File::has(const std::string& key) const { return values_.count(key) > 0; }

double File::get(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for key " + key);
  }
}

long File::get(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for key " + key);
  }
}

bool File::get(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: bad boolean for key " + key);
}

std::string File::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

harness::EpisodeConfig episode_config(const File& f) {
  harness::EpisodeConfig ep;
  ep.sim.gravity = f.get("sim.gravity", ep.sim.gravity);
  ep.sim.dt = f.get("sim.dt", ep.sim.dt);
  ep.sim.substeps = static_cast<int>(f.get("sim.substeps", long(ep.sim.substeps)));
  ep.sim.mass = f.get("sim.mass", ep.sim.mass);
  ep.sim.kp = f.get("sim.kp", ep.sim.kp);
  ep.sim.kd = f.get("sim.kd", ep.sim.kd);
  ep.sim.friction = f.get("sim.friction", ep.sim.friction);
  ep.sim.leg_stiffness = f.get("sim.leg_stiffness", ep.sim.leg_stiffness);
  ep.sim.leg_damping = f.get("sim.leg_damping", ep.sim.leg_damping);
  ep.sim.leg_rest_length = f.get("sim.leg_rest_length", ep.sim.leg_rest_length);

  ep.terrain_spec.category =
      terrain::category_from_string(f.get("terrain.category", std::string("PureFlat")));
  double difficulty = f.get("terrain.difficulty", 0.0);
  std::uint64_t tseed = static_cast<std::uint64_t>(f.get("terrain.seed", 1L));
  ep.terrain_spec = terrain::make_spec(ep.terrain_spec.category, difficulty, tseed);
  std::string tfile = f.get("terrain.file", std::string());
  if (!tfile.empty()) ep.terrain_file = tfile;

  ep.v_x_cmd = f.get("episode.speed", ep.v_x_cmd);
  ep.jump_rise = f.get("episode.jump_rise", ep.jump_rise);
  ep.max_duration = f.get("episode.duration", ep.max_duration);
  ep.seed = static_cast<std::uint64_t>(f.get("episode.seed", 1L));
  ep.randomize_gravity = f.get("episode.randomize_gravity", ep.randomize_gravity);
  ep.phase_impulses = f.get("episode.phase_impulses", ep.phase_impulses);
  ep.landing_tolerance = f.get("episode.landing_tolerance", ep.landing_tolerance);

  ep.disturbance.g_min = f.get("disturbance.g_min", ep.disturbance.g_min);
  ep.disturbance.g_max = f.get("disturbance.g_max", ep.disturbance.g_max);
  ep.disturbance.impulse_min_ns = f.get("disturbance.impulse_min", ep.disturbance.impulse_min_ns);
  ep.disturbance.impulse_max_ns = f.get("disturbance.impulse_max", ep.disturbance.impulse_max_ns);
  ep.disturbance.impulse_duration_s =
      f.get("disturbance.impulse_duration", ep.disturbance.impulse_duration_s);

  ep.reward_weights.velocity = f.get("reward.w_v", ep.reward_weights.velocity);
  ep.reward_weights.velocity_k = f.get("reward.k_v", ep.reward_weights.velocity_k);
  ep.reward_weights.regularization = f.get("reward.w_r", ep.reward_weights.regularization);
  ep.reward_weights.takeoff_k = f.get("reward.k_z", ep.reward_weights.takeoff_k);
  ep.reward_weights.flight_attitude = f.get("reward.w_f", ep.reward_weights.flight_attitude);
  ep.reward_weights.land_foot = f.get("reward.w_h", ep.reward_weights.land_foot);
  ep.peak_tolerance = f.get("reward.peak_tolerance", ep.peak_tolerance);
  ep.near_ground_margin = f.get("reward.near_ground_margin", ep.near_ground_margin);
  return ep;
}

estimator::TrainConfig train_config(const File& f) {
  estimator::TrainConfig tc;
  tc.lambda_reg = f.get("train.lambda_reg", tc.lambda_reg);
  tc.lambda_s = f.get("train.lambda_s", tc.lambda_s);
  tc.lambda_l = f.get("train.lambda_l", tc.lambda_l);
  tc.tau = f.get("train.tau", tc.tau);
  tc.batch_size = static_cast<int>(f.get("train.batch", long(tc.batch_size)));
  tc.learning_rate = f.get("train.lr", tc.learning_rate);
  tc.target_update = f.get("train.target_update", tc.target_update);
  tc.delta_s = static_cast<int>(f.get("train.delta_s", long(tc.delta_s)));
  tc.delta_l = static_cast<int>(f.get("train.delta_l", long(tc.delta_l)));
  return tc;
}

estimator::EstimatorConfig estimator_config(const File& f) {
  estimator::EstimatorConfig ec;
  std::string kind = f.get("estimator.kind", std::string("dual"));
  if (kind == "dual")
    ec.kind = estimator::EstimatorConfig::Kind::Dual;
  else if (kind == "short")
    ec.kind = estimator::EstimatorConfig::Kind::ShortOnly;
  else if (kind == "long")
    ec.kind = estimator::EstimatorConfig::Kind::LongOnly;
  else
    throw std::runtime_error("config: estimator.kind must be dual|short|long");
  ec.truncate_long_input = f.get("estimator.truncate_long", ec.truncate_long_input);
  ec.seed = static_cast<std::uint64_t>(f.get("estimator.seed", 1L));
  return ec;
}

std::string resolve_output(const std::string& path) {
  const char* base = std::getenv("LUNARHOP_OUT_DIR");
  if (!base || !*base) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace lhop::config
