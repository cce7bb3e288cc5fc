// Estimator CLI: train on a generated dataset, evaluate checkpoint MSEs.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "lhop/config.hpp"
#include "lhop/estimator.hpp"
#include "lhop/harness.hpp"

using namespace lhop;

int main(int argc, char** argv) {
  CLI::App app{"dual-horizon estimator"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train an estimator on a dataset");
  std::string data_dir = "dataset";
  std::string config_path;
  std::string out = "estimator.ckpt";
  long steps = 3000;
  train->add_option("--data", data_dir, "dataset directory (with manifest.json)");
  train->add_option("--config", config_path, "config file");
  train->add_option("--out", out, "checkpoint output path");
  train->add_option("--steps", steps, "training steps");

  auto* eval = app.add_subcommand("eval", "print the four estimation MSEs");
  std::string ckpt = "estimator.ckpt";
  std::string eval_data = "dataset";
  eval->add_option("--ckpt", ckpt, "checkpoint path");
  eval->add_option("--data", eval_data, "dataset directory (with manifest.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      config::File file = config_path.empty() ? config::File::from_string("")
                                              : config::File::load(config_path);
      estimator::EstimatorConfig model_config = config::estimator_config(file);
      estimator::TrainConfig train_config = config::train_config(file);
      steps = file.get("train.steps", steps);

      estimator::Dataset data = harness::load_dataset(data_dir + "/manifest.json");
      std::printf("dataset: %zu episodes, %zu steps\n", data.episodes.size(),
                  data.total_steps());
      auto [train_set, test_set] = harness::split_dataset(data, 0.9, model_config.seed);

      estimator::DualHorizonEstimator model(model_config);
      estimator::Trainer trainer(model, train_config);
      estimator::BatchSampler sampler(train_set, model_config, train_config,
                                      model_config.seed);
      for (long i = 1; i <= steps; ++i) {
        estimator::LossBreakdown losses = trainer.train_step(sampler.next_batch());
        if (i % 100 == 0 || i == 1)
          std::printf("step %6ld  L_DH %.5f  L_reg %.5f  L_s %.5f  L_l %.5f\n", i,
                      losses.total, losses.reg, losses.contrast_s, losses.contrast_l);
      }
      std::string out_path = config::resolve_output(out);
      estimator::save_checkpoint(model, trainer.steps_taken(), out_path);
      std::printf("wrote %s\n", out_path.c_str());

      estimator::EvalMse mse = estimator::evaluate(model, test_set, train_config);
      std::printf("held-out MSE  v_z %.5f  v_x %.5f  v_y %.5f  h %.5f\n", mse.v_z,
                  mse.v_x, mse.v_y, mse.h);
    } else if (eval->parsed()) {
      estimator::LoadedCheckpoint loaded = estimator::load_checkpoint(ckpt);
      estimator::Dataset data = harness::load_dataset(eval_data + "/manifest.json");
      estimator::EvalMse mse =
          estimator::evaluate(loaded.model, data, estimator::TrainConfig{});
      std::printf("MSE_vz %.6f\nMSE_vx %.6f\nMSE_vy %.6f\nMSE_h %.6f\n", mse.v_z,
                  mse.v_x, mse.v_y, mse.h);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
