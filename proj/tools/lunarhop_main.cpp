// Experiment harness CLI: episodes, suites, dataset generation, offline
// metric recomputation and trace plots.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "lhop/config.hpp"
#include "lhop/harness.hpp"

using namespace lhop;

namespace {

void print_metrics(const harness::EpisodeMetrics& m) {
  std::printf("survival_time        %.2f s (%ld steps)\n", m.survival_time, m.steps);
  std::printf("jumps                %d\n", m.jumps);
  std::printf("landings             %d (%d successful, %.1f%%)\n", m.landings_total,
              m.landings_successful, m.landing_success_rate);
  if (m.peak_height_error)
    std::printf("peak_height_error    %.4f m\n", *m.peak_height_error);
  if (m.estimator_mse)
    std::printf("estimator MSE        v_z %.5f  v_x %.5f  v_y %.5f  h %.5f\n",
                m.estimator_mse->v_z, m.estimator_mse->v_x, m.estimator_mse->v_y,
                m.estimator_mse->h);
  std::printf("fell                 %s\n", m.fell ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lunarhop experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "shared config file");

  auto* run = app.add_subcommand("run", "run one episode");
  std::string log_out, ckpt;
  run->add_option("--log", log_out, "write the trajectory CSV here");
  run->add_option("--ckpt", ckpt, "estimator checkpoint for online MSE");

  auto* suite = app.add_subcommand("suite", "terrains x speeds x repeats table");
  std::string suite_out = "suite.csv";
  int repeats = 10;
  suite->add_option("--out", suite_out, "metrics table CSV");
  suite->add_option("--repeats", repeats, "episodes per cell");

  auto* dataset = app.add_subcommand("dataset", "generate estimator training data");
  std::string data_dir = "dataset";
  int episodes = 100;
  dataset->add_option("--out-dir", data_dir, "output directory");
  dataset->add_option("--episodes", episodes, "episode count");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a log");
  std::string metrics_log;
  metrics->add_option("--log", metrics_log, "trajectory CSV")->required();

  auto* plot = app.add_subcommand("plot", "render height/velocity/phase traces");
  std::string plot_log, plot_out = "traces.svg";
  plot->add_option("--log", plot_log, "trajectory CSV")->required();
  plot->add_option("--out", plot_out, "SVG output path");

  CLI11_PARSE(app, argc, argv);

  try {
    config::File file = config_path.empty() ? config::File::from_string("")
                                            : config::File::load(config_path);
    harness::EpisodeConfig episode = config::episode_config(file);

    if (run->parsed()) {
      std::unique_ptr<estimator::DualHorizonEstimator> model;
      if (!ckpt.empty())
        model = std::make_unique<estimator::DualHorizonEstimator>(
            estimator::load_checkpoint(ckpt).model);
      harness::EpisodeResult result = harness::run_episode(episode, model.get());
      std::printf("gravity              %.4f m/s^2\n", result.gravity);
      print_metrics(result.metrics);
      if (!log_out.empty()) {
        std::string path = config::resolve_output(log_out);
        trajlog::write_csv(result.trajectory, path);
        std::printf("wrote %s\n", path.c_str());
      }
    } else if (suite->parsed()) {
      harness::SuiteSpec spec;
      spec.base = episode;
      spec.repeats = repeats;
      spec.terrains = harness::validation_terrains(episode.seed);
      std::vector<harness::SuiteCell> cells = harness::run_suite(spec);
      std::string path = config::resolve_output(suite_out);
      harness::write_suite_csv(cells, path);
      std::printf("%-16s %6s %10s %10s %10s\n", "terrain", "speed", "survival",
                  "std", "landing%");
      for (const auto& c : cells)
        std::printf("%-16s %6.2f %10.2f %10.2f %10.1f\n", c.terrain.c_str(), c.speed,
                    c.survival_mean, c.survival_std, c.landing_rate_mean);
      std::printf("wrote %s\n", path.c_str());
    } else if (dataset->parsed()) {
      harness::DatasetSpec spec;
      spec.base = episode;
      spec.episodes = episodes;
      spec.seed = episode.seed;
      spec.terrains = harness::validation_terrains(episode.seed);
      std::string dir = config::resolve_output(data_dir);
      harness::DatasetManifest manifest = harness::generate_dataset(spec, dir);
      std::printf("wrote %zu episodes (%ld steps) under %s\n", manifest.entries.size(),
                  manifest.total_steps, dir.c_str());
    } else if (metrics->parsed()) {
      std::vector<trajlog::StepRecord> records = trajlog::read_csv(metrics_log);
      print_metrics(harness::compute_metrics(records, episode));
    } else if (plot->parsed()) {
      std::vector<trajlog::StepRecord> records = trajlog::read_csv(plot_log);
      std::string path = config::resolve_output(plot_out);
      harness::plot_traces(records, path);
      std::printf("wrote %s\n", path.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
