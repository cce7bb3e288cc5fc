#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lhop/estimator.hpp"
#include "lhop/reward.hpp"
#include "lhop/sim.hpp"
#include "lhop/terrain.hpp"
#include "lhop/trajlog.hpp"
#include "lhop/twin.hpp"

namespace lhop::harness {

struct EpisodeConfig {
  terrain::Spec terrain_spec;
  std::optional<std::string> terrain_file;  // overrides terrain_spec when set
  double v_x_cmd = 0.5;                     // m/s
  double jump_rise = 0.3;                   // commanded apex above h_stance, m
  double max_duration = 20.0;               // s
  std::uint64_t seed = 1;
  bool randomize_gravity = true;
  bool phase_impulses = true;
  twin::DisturbanceModel disturbance;
  sim::SimConfig sim;
  reward::RewardWeights reward_weights;
  double near_ground_margin = 0.05;  // h_thr = h_stance + margin
  double peak_tolerance = 0.04;      // delta_h, m
  double landing_tolerance = 0.2;    // rad
  double fall_angle = 60.0 * 3.14159265358979323846 / 180.0;

  /// Commanded apex height above local terrain.
  double h_cmd() const { return sim.h_stance() + jump_rise; }
};

struct EpisodeMetrics {
  double survival_time = 0.0;
  long steps = 0;
  int landings_total = 0;
  int landings_successful = 0;
  double landing_success_rate = 0.0;  // percent
  int jumps = 0;                      // apex events
  std::optional<double> peak_height_error;
  std::optional<estimator::EvalMse> estimator_mse;
  bool fell = false;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<trajlog::StepRecord> trajectory;
  double gravity = 0.0;  // the episode's (possibly randomized) gravity
};

/// true iff |roll| and |pitch| are within tolerance of upright.
bool landing_success(const sim::RobotState& touchdown_state, double tolerance_rad);

/// Mean over jumps of |apex - h_cmd|. Throws std::invalid_argument when the
/// trajectory contains no apex.
double peak_height_error(const std::vector<trajlog::StepRecord>& trajectory,
                         double h_cmd);

/// Derives every metric from the step records alone; run_episode and the
/// offline `metrics` verb share this path, so recomputation is exact.
EpisodeMetrics compute_metrics(const std::vector<trajlog::StepRecord>& trajectory,
                               const EpisodeConfig& config,
                               const estimator::DualHorizonEstimator* model = nullptr);

EpisodeResult run_episode(const EpisodeConfig& config,
                          const estimator::DualHorizonEstimator* model = nullptr);

reward::RewardConfig make_reward_config(const EpisodeConfig& config, double gravity);

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct NamedTerrain {
  std::string name;
  terrain::Spec spec;
};

/// The four validation terrains: mare plains, uneven ground, hilly terrain,
/// crater terrain.
std::vector<NamedTerrain> validation_terrains(std::uint64_t seed);

struct SuiteSpec {
  std::vector<NamedTerrain> terrains;
  std::vector<double> speeds = {0.3, 0.5, 0.7};
  int repeats = 10;
  EpisodeConfig base;
};

struct SuiteCell {
  std::string terrain;
  double speed = 0.0;
  int episodes = 0;
  int failures = 0;  // episodes that errored; the suite continues
  double survival_mean = 0.0;
  double survival_std = 0.0;
  double landing_rate_mean = 0.0;
  double peak_error_mean = 0.0;
};

/// Cross product terrains x speeds x repeats. Episodes may run in parallel;
/// cells merge by key so the table is independent of completion order.
std::vector<SuiteCell> run_suite(const SuiteSpec& spec);

void write_suite_csv(const std::vector<SuiteCell>& cells, const std::string& path);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct DatasetSpec {
  std::vector<NamedTerrain> terrains;  // cycled over episodes
  std::vector<double> speeds = {0.0, 0.3, 0.5, 0.7};
  int episodes = 100;
  double duration = 20.0;
  std::uint64_t seed = 7;
  EpisodeConfig base;
};

struct DatasetManifest {
  struct Entry {
    std::string file;
    long steps = 0;
    std::uint64_t seed = 0;
    std::uint64_t checksum = 0;  // FNV-1a of the file bytes
  };
  std::vector<Entry> entries;
  long total_steps = 0;
};

DatasetManifest generate_dataset(const DatasetSpec& spec, const std::string& out_dir);
void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

/// Loads every episode listed in a manifest, verifying checksums.
estimator::Dataset load_dataset(const std::string& manifest_path);

/// Rollouts kept in memory; used by tests and the estimator ablations.
estimator::Dataset generate_dataset_memory(const DatasetSpec& spec);

/// Seed-deterministic split by episode, roughly train_fraction of episodes.
std::pair<estimator::Dataset, estimator::Dataset> split_dataset(
    const estimator::Dataset& data, double train_fraction, std::uint64_t seed);

std::uint64_t file_checksum(const std::string& path);

// ---------------------------------------------------------------------------
// Plots
// ---------------------------------------------------------------------------

/// Static SVG with height, vertical-velocity and phase-weight traces.
void plot_traces(const std::vector<trajlog::StepRecord>& trajectory,
                 const std::string& svg_path);

}  // namespace lhop::harness
