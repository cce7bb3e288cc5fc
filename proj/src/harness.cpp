#include "lhop/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lhop/rng.hpp"

namespace lhop::harness {

namespace fs = std::filesystem;

reward::RewardConfig make_reward_config(const EpisodeConfig& config, double gravity) {
  reward::RewardConfig rc;
  rc.h_stance = config.sim.h_stance();
  rc.h_cmd = config.h_cmd();
  rc.h_thr = rc.h_stance + config.near_ground_margin;
  rc.g = gravity;
  rc.delta_h = config.peak_tolerance;
  rc.v_x_cmd = config.v_x_cmd;
  rc.weights = config.reward_weights;
  return rc;
}

bool landing_success(const sim::RobotState& touchdown_state, double tolerance_rad) {
  return std::abs(touchdown_state.roll) <= tolerance_rad &&
         std::abs(touchdown_state.pitch) <= tolerance_rad;
}

double peak_height_error(const std::vector<trajlog::StepRecord>& trajectory,
                         double h_cmd) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : trajectory)
    if (r.apex_event) {
      sum += std::abs(r.apex_height - h_cmd);
      ++count;
    }
  if (count == 0)
    throw std::invalid_argument("peak_height_error: trajectory has no apex");
  return sum / count;
}

EpisodeMetrics compute_metrics(const std::vector<trajlog::StepRecord>& trajectory,
                               const EpisodeConfig& config,
                               const estimator::DualHorizonEstimator* model) {
  EpisodeMetrics m;
  m.steps = static_cast<long>(trajectory.size());
  m.survival_time = std::min(m.steps * config.sim.dt, config.max_duration);
  double h_cmd = config.h_cmd();
  double peak_sum = 0.0;
  for (const auto& r : trajectory) {
    if (r.apex_event) {
      ++m.jumps;
      peak_sum += std::abs(r.apex_height - h_cmd);
    }
    if (r.touchdown_event) {
      ++m.landings_total;
      if (std::abs(r.td_roll) <= config.landing_tolerance &&
          std::abs(r.td_pitch) <= config.landing_tolerance)
        ++m.landings_successful;
    }
  }
  if (m.jumps > 0) m.peak_height_error = peak_sum / m.jumps;
  m.landing_success_rate =
      m.landings_total > 0 ? 100.0 * m.landings_successful / m.landings_total : 0.0;
  if (!trajectory.empty()) {
    const auto& last = trajectory.back().state;
    m.fell = std::abs(last.roll) > config.fall_angle ||
             std::abs(last.pitch) > config.fall_angle ||
             last.height_above_terrain() < 0.0;
  }

  if (model) {
    estimator::Episode ep = trajlog::to_episode(trajectory);
    estimator::EvalMse mse;
    estimator::HistoryBuffer history;
    std::size_t n = 0;
    for (std::size_t t = 0; t < ep.obs.size(); ++t) {
      history.push(ep.obs[t]);
      estimator::EstimatorOutput out = model->estimate(history);
      double ex = out.v_x - ep.truth[t][0];
      double ey = out.v_y - ep.truth[t][1];
      double ez = out.v_z - ep.truth[t][2];
      double eh = out.h - ep.truth[t][3];
      mse.v_x += ex * ex;
      mse.v_y += ey * ey;
      mse.v_z += ez * ez;
      mse.h += eh * eh;
      ++n;
    }
    if (n > 0) {
      mse.v_x /= n;
      mse.v_y /= n;
      mse.v_z /= n;
      mse.h /= n;
      m.estimator_mse = mse;
    }
  }
  return m;
}

EpisodeResult run_episode(const EpisodeConfig& config,
                          const estimator::DualHorizonEstimator* model) {
  terrain::Heightfield field = config.terrain_file
                                   ? terrain::load_lhf(*config.terrain_file)
                                   : terrain::generate_patch(config.terrain_spec);

  twin::DisturbancePlan plan(config.disturbance, config.seed);
  double gravity = config.randomize_gravity ? plan.episode_gravity() : config.sim.gravity;

  sim::SimConfig sim_config = config.sim;
  sim_config.gravity = gravity;
  reward::RewardConfig reward_config = make_reward_config(config, gravity);

  sim::ScriptedPronk::Target target{config.h_cmd(), config.v_x_cmd};
  sim::ScriptedPronk controller(target, sim_config,
                                sim::ScriptedPronk::calibrate(target, sim_config));

  sim::Simulator simulator(field, sim_config);
  simulator.reset(terrain::kPatchSize / 2.0, terrain::kPatchSize / 2.0);
  simulator.set_command_velocity({config.v_x_cmd, 0.0, 0.0});

  const long max_steps = std::lround(config.max_duration / sim_config.dt);
  std::vector<trajlog::StepRecord> records;
  records.reserve(max_steps);

  bool prev_takeoff = false, prev_land = false;
  for (long step = 0; step < max_steps; ++step) {
    sim::Action action = controller.act(simulator.state());
    const sim::Action& prev_action = simulator.previous_action();
    double reg = 0.0;
    for (int i = 0; i < sim::kNumJoints; ++i) {
      double a = std::clamp(action.delta_q[i], -sim::kActionLimit, sim::kActionLimit);
      double d = a - prev_action.delta_q[i];
      reg += d * d;
    }

    trajlog::StepRecord rec;
    rec.obs = simulator.step(action);
    rec.state = simulator.state();
    rec.action = simulator.previous_action();
    rec.reward = reward::total_reward(rec.state, reg, simulator.apex_this_step(),
                                      reward_config);
    if (simulator.apex_this_step()) {
      rec.apex_event = true;
      rec.apex_height = *simulator.apex_this_step();
    }
    if (simulator.touchdown_this_step()) {
      const sim::JumpEvent& ev = *simulator.touchdown_this_step();
      rec.touchdown_event = true;
      rec.td_roll = ev.touchdown_roll;
      rec.td_pitch = ev.touchdown_pitch;
      rec.td_speed = ev.touchdown_speed;
      rec.td_time = ev.touchdown_time;
    }
    records.push_back(rec);

    if (config.phase_impulses) {
      bool now_takeoff = rec.reward.phase.takeoff;
      bool now_land = rec.reward.phase.land;
      if ((now_takeoff && !prev_takeoff) || (now_land && !prev_land)) {
        twin::Impulse imp = plan.on_phase_entry(now_takeoff && !prev_takeoff);
        if (imp.duration_s > 0.0) {
          sim::Vec3 force{imp.impulse_ns.x / imp.duration_s,
                          imp.impulse_ns.y / imp.duration_s,
                          imp.impulse_ns.z / imp.duration_s};
          simulator.set_external_force(force, rec.state.time + imp.duration_s);
        }
      }
      prev_takeoff = now_takeoff;
      prev_land = now_land;
    }

    const sim::RobotState& s = simulator.state();
    if (std::abs(s.roll) > config.fall_angle || std::abs(s.pitch) > config.fall_angle ||
        s.height_above_terrain() < 0.0)
      break;
  }

  EpisodeResult result;
  result.trajectory = std::move(records);
  result.metrics = compute_metrics(result.trajectory, config, model);
  result.gravity = gravity;
  return result;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

std::vector<NamedTerrain> validation_terrains(std::uint64_t seed) {
  using terrain::Category;
  return {
      {"mare_plains", terrain::make_spec(Category::PerlinFlat, 0.2, Rng::derive(seed, 11))},
      {"uneven_ground", terrain::make_spec(Category::PerlinFlat, 0.7, Rng::derive(seed, 12))},
      {"hilly_terrain", terrain::make_spec(Category::PerlinSlope, 0.5, Rng::derive(seed, 13))},
      {"crater_terrain", terrain::make_spec(Category::PerlinCrater, 0.5, Rng::derive(seed, 14))},
  };
}

std::vector<SuiteCell> run_suite(const SuiteSpec& spec) {
  const int nt = static_cast<int>(spec.terrains.size());
  const int ns = static_cast<int>(spec.speeds.size());
  const int nr = spec.repeats;
  const int total = nt * ns * nr;

  struct EpisodeOutcome {
    bool ok = false;
    EpisodeMetrics metrics;
  };
  std::vector<EpisodeOutcome> outcomes(total);

#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < total; ++idx) {
    int i = idx / (ns * nr);
    int j = (idx / nr) % ns;
    int k = idx % nr;
    EpisodeConfig ep = spec.base;
    ep.terrain_spec = spec.terrains[i].spec;
    // Fresh terrain noise per repeat, same category and difficulty.
    ep.terrain_spec.seed = Rng::derive(spec.terrains[i].spec.seed, std::uint64_t(k));
    ep.terrain_file.reset();
    ep.v_x_cmd = spec.speeds[j];
    ep.seed = Rng::derive(spec.base.seed, std::uint64_t(idx));
    try {
      outcomes[idx].metrics = run_episode(ep).metrics;
      outcomes[idx].ok = true;
    } catch (const std::exception&) {
      outcomes[idx].ok = false;
    }
  }

  std::vector<SuiteCell> cells;
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < ns; ++j) {
      SuiteCell cell;
      cell.terrain = spec.terrains[i].name;
      cell.speed = spec.speeds[j];
      double sum = 0.0, sum2 = 0.0, land = 0.0, peak = 0.0;
      int peak_count = 0;
      for (int k = 0; k < nr; ++k) {
        const EpisodeOutcome& o = outcomes[(i * ns + j) * nr + k];
        if (!o.ok) {
          ++cell.failures;
          continue;
        }
        ++cell.episodes;
        sum += o.metrics.survival_time;
        sum2 += o.metrics.survival_time * o.metrics.survival_time;
        land += o.metrics.landing_success_rate;
        if (o.metrics.peak_height_error) {
          peak += *o.metrics.peak_height_error;
          ++peak_count;
        }
      }
      if (cell.episodes > 0) {
        cell.survival_mean = sum / cell.episodes;
        double var = sum2 / cell.episodes - cell.survival_mean * cell.survival_mean;
        cell.survival_std = std::sqrt(std::max(0.0, var));
        cell.landing_rate_mean = land / cell.episodes;
        cell.peak_error_mean = peak_count > 0 ? peak / peak_count : 0.0;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_suite_csv(const std::vector<SuiteCell>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_suite_csv: cannot open " + path);
  out << "terrain,speed,episodes,failures,survival_mean,survival_std,"
         "landing_rate_mean,peak_error_mean\n";
  char line[256];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof(line), "%s,%.2f,%d,%d,%.6f,%.6f,%.6f,%.6f\n",
                  c.terrain.c_str(), c.speed, c.episodes, c.failures, c.survival_mean,
                  c.survival_std, c.landing_rate_mean, c.peak_error_mean);
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_checksum: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x00000100000001b3ull;
    }
    if (!in) break;
  }
  return h;
}

namespace {

EpisodeConfig dataset_episode_config(const DatasetSpec& spec, int index) {
  EpisodeConfig ep = spec.base;
  const auto& terrain = spec.terrains[index % spec.terrains.size()];
  ep.terrain_spec = terrain.spec;
  ep.terrain_spec.seed = Rng::derive(terrain.spec.seed, std::uint64_t(index));
  ep.terrain_file.reset();
  ep.v_x_cmd = spec.speeds[index % spec.speeds.size()];
  ep.max_duration = spec.duration;
  ep.seed = Rng::derive(spec.seed, std::uint64_t(index));
  return ep;
}

}  // namespace

DatasetManifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  for (int i = 0; i < spec.episodes; ++i) {
    EpisodeConfig ep = dataset_episode_config(spec, i);
    EpisodeResult result = run_episode(ep);
    char name[64];
    std::snprintf(name, sizeof(name), "episode_%04d.csv", i);
    std::string path = (fs::path(out_dir) / name).string();
    trajlog::write_csv(result.trajectory, path);
    DatasetManifest::Entry entry;
    entry.file = name;
    entry.steps = static_cast<long>(result.trajectory.size());
    entry.seed = ep.seed;
    entry.checksum = file_checksum(path);
    manifest.total_steps += entry.steps;
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["total_steps"] = manifest.total_steps;
  j["episodes"] = nlohmann::json::array();
  for (const auto& e : manifest.entries)
    j["episodes"].push_back({{"file", e.file},
                             {"steps", e.steps},
                             {"seed", e.seed},
                             {"checksum", e.checksum}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  DatasetManifest manifest;
  manifest.total_steps = j.at("total_steps").get<long>();
  for (const auto& e : j.at("episodes")) {
    DatasetManifest::Entry entry;
    entry.file = e.at("file").get<std::string>();
    entry.steps = e.at("steps").get<long>();
    entry.seed = e.at("seed").get<std::uint64_t>();
    entry.checksum = e.at("checksum").get<std::uint64_t>();
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

estimator::Dataset load_dataset(const std::string& manifest_path) {
  DatasetManifest manifest = read_manifest(manifest_path);
  fs::path dir = fs::path(manifest_path).parent_path();
  estimator::Dataset data;
  for (const auto& entry : manifest.entries) {
    std::string file = (dir / entry.file).string();
    if (file_checksum(file) != entry.checksum)
      throw std::runtime_error("load_dataset: checksum mismatch for " + entry.file);
    data.episodes.push_back(trajlog::to_episode(trajlog::read_csv(file)));
  }
  return data;
}

estimator::Dataset generate_dataset_memory(const DatasetSpec& spec) {
  estimator::Dataset data;
  data.episodes.resize(spec.episodes);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < spec.episodes; ++i) {
    EpisodeResult result = run_episode(dataset_episode_config(spec, i));
    data.episodes[i] = trajlog::to_episode(result.trajectory);
  }
  return data;
}

std::pair<estimator::Dataset, estimator::Dataset> split_dataset(
    const estimator::Dataset& data, double train_fraction, std::uint64_t seed) {
  std::vector<int> order(data.episodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);
  std::size_t n_train = static_cast<std::size_t>(
      std::lround(train_fraction * static_cast<double>(order.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  std::pair<estimator::Dataset, estimator::Dataset> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_train ? out.first : out.second;
    dst.episodes.push_back(data.episodes[order[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plots
// ---------------------------------------------------------------------------

namespace {

struct SvgPanel {
  double x0, y0, w, h;       // pixel box
  double tmin, tmax, vmin, vmax;

  double px(double t) const { return x0 + (t - tmin) / (tmax - tmin) * w; }
  double py(double v) const { return y0 + h - (v - vmin) / (vmax - vmin) * h; }
};

void polyline(std::ofstream& out, const SvgPanel& p, const std::vector<double>& t,
              const std::vector<double>& v, const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
  char buf[48];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", p.px(t[i]), p.py(v[i]));
    out << buf;
  }
  out << "\"/>\n";
}

void panel_frame(std::ofstream& out, const SvgPanel& p, const char* label) {
  out << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w
      << "\" height=\"" << p.h << "\" fill=\"none\" stroke=\"#999\"/>\n"
      << "<text x=\"" << p.x0 + 4 << "\" y=\"" << p.y0 + 14
      << "\" font-size=\"12\" font-family=\"sans-serif\">" << label << "</text>\n";
}

}  // namespace

void plot_traces(const std::vector<trajlog::StepRecord>& trajectory,
                 const std::string& svg_path) {
  if (trajectory.empty()) throw std::invalid_argument("plot_traces: empty trajectory");
  std::vector<double> t, h, vz, wt, wf, wl;
  for (const auto& r : trajectory) {
    t.push_back(r.state.time);
    h.push_back(r.state.height_above_terrain());
    vz.push_back(r.state.com_velocity.z);
    wt.push_back(r.reward.phase.takeoff ? 1.0 : 0.0);
    wf.push_back(r.reward.phase.flight ? 1.0 : 0.0);
    wl.push_back(r.reward.phase.land ? 1.0 : 0.0);
  }
  auto range = [](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double pad = std::max(1e-3, 0.05 * (*hi - *lo));
    return std::pair<double, double>(*lo - pad, *hi + pad);
  };

  std::ofstream out(svg_path);
  if (!out) throw std::runtime_error("plot_traces: cannot open " + svg_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"540\" "
         "viewBox=\"0 0 900 540\">\n<rect width=\"900\" height=\"540\" fill=\"white\"/>\n";

  auto [hlo, hhi] = range(h);
  SvgPanel ph{50, 20, 820, 150, t.front(), t.back(), hlo, hhi};
  panel_frame(out, ph, "CoM height above terrain [m]");
  polyline(out, ph, t, h, "#1f77b4");

  auto [vlo, vhi] = range(vz);
  SvgPanel pv{50, 190, 820, 150, t.front(), t.back(), vlo, vhi};
  panel_frame(out, pv, "vertical velocity [m/s]");
  polyline(out, pv, t, vz, "#d62728");

  SvgPanel pw{50, 360, 820, 150, t.front(), t.back(), -0.1, 1.1};
  panel_frame(out, pw, "phase weights: takeoff / flight / land");
  polyline(out, pw, t, wt, "#2ca02c");
  polyline(out, pw, t, wf, "#9467bd");
  polyline(out, pw, t, wl, "#ff7f0e");

  out << "</svg>\n";
}

}  // namespace lhop::harness
