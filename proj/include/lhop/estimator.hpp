#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lhop/mlp.hpp"
#include "lhop/sim.hpp"

namespace lhop::estimator {

inline constexpr int kShortFrames = 6;    // ~0.12 s at 50 Hz
inline constexpr int kLongFrames = 15;    // subsampled, ~0.9 s
inline constexpr int kLongStride = 3;     // control steps between long frames
inline constexpr int kLongSpan = (kLongFrames - 1) * kLongStride;  // 42
inline constexpr int kLatentDim = 16;
inline constexpr int kShortInput = kShortFrames * sim::kObservationDim;  // 270
inline constexpr int kLongInput = kLongFrames * sim::kObservationDim;    // 675
inline constexpr int kFusedDim = 4 + 2 * kLatentDim;  // 36

/// Ring buffer of observations serving both temporal windows. Slots that
/// predate the first frame are filled with the earliest frame.
class HistoryBuffer {
 public:
  HistoryBuffer() = default;

  void push(const sim::Observation& o);
  void clear();
  int size() const { return count_; }

  /// Last 6 frames, oldest first, flattened to 270 values.
  std::vector<double> short_window() const;
  /// Frames {t-42, t-39, ..., t}, oldest first, flattened to 675 values.
  std::vector<double> long_window() const;
  /// The 6 most recent strided frames {t-15, ..., t}, flattened to 270.
  std::vector<double> long_window_truncated() const;

 private:
  const sim::Observation& frame_back(int steps_back) const;
  std::array<sim::Observation, kLongSpan + 1> frames_{};
  int head_ = -1;
  int count_ = 0;
};

struct EstimatorConfig {
  enum class Kind { Dual, ShortOnly, LongOnly };
  Kind kind = Kind::Dual;
  std::vector<int> hidden = {128, 64};
  int latent_dim = kLatentDim;
  /// Feed the long encoder only 6 strided frames (input 270 instead of 675).
  bool truncate_long_input = false;
  std::uint64_t seed = 1;

  int long_input_dim() const {
    return (truncate_long_input ? kShortFrames : kLongFrames) * sim::kObservationDim;
  }
};

/// Explicit estimates plus the two latents; z is the fused 36-dim vector
/// [v_x, v_y, v_z, h, h_s, h_l].
struct EstimatorOutput {
  double v_x = 0.0, v_y = 0.0, v_z = 0.0, h = 0.0;
  std::vector<double> h_s;
  std::vector<double> h_l;
};

/// Deterministic concatenation [v_x, v_y, v_z, h, h_s, h_l]. Throws if the
/// latent sizes do not match the documented layout.
std::vector<double> fuse(const EstimatorOutput& out);

/// The dual-horizon internal model: a short-horizon encoder for fast vertical
/// dynamics and a long-horizon encoder for slow jump-cycle trends, plus the
/// single-frame target encoder pair used by the contrastive objectives.
class DualHorizonEstimator {
 public:
  explicit DualHorizonEstimator(const EstimatorConfig& config);

  const EstimatorConfig& config() const { return config_; }

  /// Short branch: input 270, output [v_z, h_s]. Dual kind only.
  std::pair<double, std::vector<double>> encode_short(const std::vector<double>& window) const;
  /// Long branch: input 675 (or 270 truncated), output [v_x, v_y, h, h_l].
  struct LongOutput {
    double v_x = 0.0, v_y = 0.0, h = 0.0;
    std::vector<double> latent;
  };
  LongOutput encode_long(const std::vector<double>& window) const;

  /// Full estimate for the current history, respecting the configured kind.
  EstimatorOutput estimate(const HistoryBuffer& history) const;

  // Trainable networks; exposed for the trainer and for gradient checks.
  mlp::Mlp short_net;   // Dual / ShortOnly
  mlp::Mlp long_net;    // Dual / LongOnly
  mlp::Mlp target_online;  // single-frame [45, 64, 16]
  mlp::Mlp target;         // EMA copy; receives no gradient

  bool has_short() const { return config_.kind != EstimatorConfig::Kind::LongOnly; }
  bool has_long() const { return config_.kind != EstimatorConfig::Kind::ShortOnly; }

 private:
  EstimatorConfig config_;
};

/// Sum of squared errors over the four explicit estimates (one sample).
double regression_loss(const EstimatorOutput& out,
                       const std::array<double, 4>& truth_vx_vy_vz_h);

/// InfoNCE over a batch: anchors[i] is pulled toward targets[positives[i]]
/// against all other targets, cosine similarity at temperature tau.
/// positives defaults to the identity map. Throws for batches smaller than 2
/// or zero-norm embeddings.
double infonce_loss(const std::vector<std::vector<double>>& anchors,
                    const std::vector<std::vector<double>>& targets, double tau,
                    const std::vector<int>* positives = nullptr);

struct TrainConfig {
  double lambda_reg = 1.0;
  double lambda_s = 0.1;
  double lambda_l = 0.1;
  double tau = 0.1;
  int delta_s = 1;  // control steps to the short positive
  int delta_l = 6;  // control steps to the long positive (0.12 s)
  int batch_size = 256;
  double learning_rate = 1e-3;
  double target_update = 0.995;  // EMA coefficient
  Exec exec = Exec::Parallel;
};

/// One training item: both windows at time t, the two future observations
/// used as contrastive positives, and the ground-truth regression targets.
struct Sample {
  std::vector<double> short_window;
  std::vector<double> long_window;
  std::vector<double> future_short;  // o_{t + delta_s}
  std::vector<double> future_long;   // o_{t + delta_l}
  std::array<double, 4> truth{};     // v_x, v_y, v_z, h
};

struct LossBreakdown {
  double reg = 0.0;       // L_reg
  double contrast_s = 0.0;  // L_s
  double contrast_l = 0.0;  // L_l
  double total = 0.0;       // L_DH
};

struct EstimatorGradients {
  mlp::Gradients short_net;
  mlp::Gradients long_net;
  mlp::Gradients target_online;
};

class Trainer {
 public:
  Trainer(DualHorizonEstimator& model, const TrainConfig& config);

  /// One optimizer step over the batch. Throws on non-finite losses.
  LossBreakdown train_step(const std::vector<Sample>& batch);

  /// Losses only, no parameter update; the finite-difference oracle calls
  /// this while perturbing parameters.
  LossBreakdown compute_losses(const std::vector<Sample>& batch) const;

  /// Losses plus analytic gradients of L_DH w.r.t. the branch encoders (and
  /// of the alignment loss w.r.t. the online target encoder).
  LossBreakdown compute_gradients(const std::vector<Sample>& batch,
                                  EstimatorGradients& grads) const;

  long steps_taken() const { return steps_; }
  const TrainConfig& config() const { return config_; }

 private:
  DualHorizonEstimator& model_;
  TrainConfig config_;
  mlp::Adam opt_short_;
  mlp::Adam opt_long_;
  mlp::Adam opt_target_;
  long steps_ = 0;
};

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// One episode of observations with per-step ground truth (v_x, v_y, v_z, h).
struct Episode {
  std::vector<sim::Observation> obs;
  std::vector<std::array<double, 4>> truth;
};

struct Dataset {
  std::vector<Episode> episodes;
  std::size_t total_steps() const;
};

/// Builds the sample at step t of an episode; histories before the first
/// frame are clamped to it, mirroring HistoryBuffer. Requires
/// t + delta_l < episode length.
Sample make_sample(const Episode& episode, int t, const EstimatorConfig& config,
                   int delta_s, int delta_l);

/// Deterministic shuffled pass over all valid (episode, step) indices.
class BatchSampler {
 public:
  BatchSampler(const Dataset& data, const EstimatorConfig& config,
               const TrainConfig& train, std::uint64_t seed);
  std::vector<Sample> next_batch();
  std::size_t samples_per_epoch() const { return indices_.size(); }

 private:
  const Dataset& data_;
  EstimatorConfig config_;
  TrainConfig train_;
  std::vector<std::pair<int, int>> indices_;
  std::size_t cursor_ = 0;
  std::uint64_t seed_;
  int epoch_ = 0;
  void reshuffle();
};

struct EvalMse {
  double v_z = 0.0, v_x = 0.0, v_y = 0.0, h = 0.0;
};

/// Mean squared errors of the explicit estimates over every valid sample.
EvalMse evaluate(const DualHorizonEstimator& model, const Dataset& data,
                 const TrainConfig& train);

/// Checkpoint: binary with layer dims, f32 parameters, the EMA target state
/// and the training-step counter.
void save_checkpoint(const DualHorizonEstimator& model, long train_steps,
                     const std::string& path);
struct LoadedCheckpoint {
  DualHorizonEstimator model;
  long train_steps = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lhop::estimator
