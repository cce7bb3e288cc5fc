#pragma once

#include <map>
#include <string>

#include "lhop/estimator.hpp"
#include "lhop/harness.hpp"

namespace lhop::config {

/// Flat `key = value` file with '#' comments. Dotted keys group by module,
/// e.g. sim.gravity, episode.speed, train.batch (schema in the README).
class File {
 public:
  static File load(const std::string& path);
  static File from_string(const std::string& text);

  bool has(const std::string& key) const;
  double get(const std::string& key, double fallback) const;
  long get(const std::string& key, long fallback) const;
  bool get(const std::string& key, bool fallback) const;
  std::string get(const std::string& key, const std::string& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

harness::EpisodeConfig episode_config(const File& file);
estimator::TrainConfig train_config(const File& file);
estimator::EstimatorConfig estimator_config(const File& file);

/// Applies the LUNARHOP_OUT_DIR environment override to relative output
/// paths; absolute paths pass through.
std::string resolve_output(const std::string& path);

}  // namespace lhop::config
