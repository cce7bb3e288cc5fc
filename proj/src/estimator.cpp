#include "lhop/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lhop/rng.hpp"

namespace lhop::estimator {

// ---------------------------------------------------------------------------
// HistoryBuffer
// ---------------------------------------------------------------------------

void HistoryBuffer::push(const sim::Observation& o) {
  head_ = (head_ + 1) % static_cast<int>(frames_.size());
  frames_[head_] = o;
  count_ = std::min(count_ + 1, static_cast<int>(frames_.size()));
}

void HistoryBuffer::clear() {
  head_ = -1;
  count_ = 0;
}

const sim::Observation& HistoryBuffer::frame_back(int steps_back) const {
  if (count_ == 0) throw std::logic_error("HistoryBuffer: empty");
  int back = std::min(steps_back, count_ - 1);  // clamp to the earliest frame
  int idx = head_ - back;
  int cap = static_cast<int>(frames_.size());
  idx = ((idx % cap) + cap) % cap;
  return frames_[idx];
}

namespace {

void append_frame(std::vector<double>& out, const sim::Observation& o) {
  out.insert(out.end(), o.v.begin(), o.v.end());
}

}  // namespace

std::vector<double> HistoryBuffer::short_window() const {
  std::vector<double> out;
  out.reserve(kShortInput);
  for (int k = kShortFrames - 1; k >= 0; --k) append_frame(out, frame_back(k));
  return out;
}

std::vector<double> HistoryBuffer::long_window() const {
  std::vector<double> out;
  out.reserve(kLongInput);
  for (int f = kLongFrames - 1; f >= 0; --f)
    append_frame(out, frame_back(f * kLongStride));
  return out;
}

std::vector<double> HistoryBuffer::long_window_truncated() const {
  std::vector<double> out;
  out.reserve(kShortInput);
  for (int f = kShortFrames - 1; f >= 0; --f)
    append_frame(out, frame_back(f * kLongStride));
  return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

namespace {

std::vector<int> net_dims(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> dims;
  dims.push_back(input);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

}  // namespace

DualHorizonEstimator::DualHorizonEstimator(const EstimatorConfig& config)
    : config_(config) {
  using Kind = EstimatorConfig::Kind;
  int lat = config.latent_dim;
  if (config.kind == Kind::Dual) {
    short_net = mlp::Mlp::create(net_dims(kShortInput, config.hidden, 1 + lat),
                                 Rng::derive(config.seed, 1));
    long_net = mlp::Mlp::create(net_dims(config.long_input_dim(), config.hidden, 3 + lat),
                                Rng::derive(config.seed, 2));
  } else if (config.kind == Kind::ShortOnly) {
    short_net = mlp::Mlp::create(net_dims(kShortInput, config.hidden, 4 + lat),
                                 Rng::derive(config.seed, 1));
  } else {
    long_net = mlp::Mlp::create(net_dims(config.long_input_dim(), config.hidden, 4 + lat),
                                Rng::derive(config.seed, 2));
  }
  target_online = mlp::Mlp::create({sim::kObservationDim, 64, lat}, Rng::derive(config.seed, 3));
  target = target_online;
}

std::pair<double, std::vector<double>> DualHorizonEstimator::encode_short(
    const std::vector<double>& window) const {
  if (config_.kind == EstimatorConfig::Kind::LongOnly)
    throw std::logic_error("encode_short: long-only model");
  std::vector<double> y;
  short_net.forward(window, y);
  return {y[0], std::vector<double>(y.begin() + 1, y.end())};
}

DualHorizonEstimator::LongOutput DualHorizonEstimator::encode_long(
    const std::vector<double>& window) const {
  if (config_.kind == EstimatorConfig::Kind::ShortOnly)
    throw std::logic_error("encode_long: short-only model");
  std::vector<double> y;
  long_net.forward(window, y);
  LongOutput out;
  out.v_x = y[0];
  out.v_y = y[1];
  out.h = y[2];
  out.latent.assign(y.begin() + 3, y.end());
  return out;
}

EstimatorOutput DualHorizonEstimator::estimate(const HistoryBuffer& history) const {
  using Kind = EstimatorConfig::Kind;
  EstimatorOutput out;
  auto long_input = [&] {
    return config_.truncate_long_input ? history.long_window_truncated()
                                       : history.long_window();
  };
  if (config_.kind == Kind::Dual) {
    auto [v_z, h_s] = encode_short(history.short_window());
    out.v_z = v_z;
    out.h_s = std::move(h_s);
    LongOutput lo = encode_long(long_input());
    out.v_x = lo.v_x;
    out.v_y = lo.v_y;
    out.h = lo.h;
    out.h_l = std::move(lo.latent);
  } else if (config_.kind == Kind::ShortOnly) {
    std::vector<double> y;
    short_net.forward(history.short_window(), y);
    out.v_x = y[0];
    out.v_y = y[1];
    out.v_z = y[2];
    out.h = y[3];
    out.h_s.assign(y.begin() + 4, y.end());
  } else {
    std::vector<double> y;
    long_net.forward(long_input(), y);
    out.v_x = y[0];
    out.v_y = y[1];
    out.v_z = y[2];
    out.h = y[3];
    out.h_l.assign(y.begin() + 4, y.end());
  }
  return out;
}

std::vector<double> fuse(const EstimatorOutput& out) {
  if (out.h_s.size() != kLatentDim || out.h_l.size() != kLatentDim)
    throw std::invalid_argument("fuse: latent layout mismatch");
  std::vector<double> z;
  z.reserve(kFusedDim);
  z.push_back(out.v_x);
  z.push_back(out.v_y);
  z.push_back(out.v_z);
  z.push_back(out.h);
  z.insert(z.end(), out.h_s.begin(), out.h_s.end());
  z.insert(z.end(), out.h_l.begin(), out.h_l.end());
  return z;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

double regression_loss(const EstimatorOutput& out,
                       const std::array<double, 4>& truth) {
  double ex = out.v_x - truth[0];
  double ey = out.v_y - truth[1];
  double ez = out.v_z - truth[2];
  double eh = out.h - truth[3];
  return ex * ex + ey * ey + ez * ez + eh * eh;
}

namespace {

// InfoNCE over row-major batches. Writes dL/d(anchor) scaled by `scale` into
// d_anchors when non-null. Targets never receive gradient here.
double infonce_core(const double* anchors, const double* targets, int batch, int dim,
                    double tau, const std::vector<int>* positives, double* d_anchors,
                    double scale) {
  if (batch < 2) throw std::invalid_argument("infonce: batch must be >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("infonce: tau must be positive");

  std::vector<double> a_norm(batch), t_norm(batch);
  for (int i = 0; i < batch; ++i) {
    double na = 0.0, nt = 0.0;
    for (int d = 0; d < dim; ++d) {
      na += anchors[std::size_t(i) * dim + d] * anchors[std::size_t(i) * dim + d];
      nt += targets[std::size_t(i) * dim + d] * targets[std::size_t(i) * dim + d];
    }
    a_norm[i] = std::sqrt(na);
    t_norm[i] = std::sqrt(nt);
    if (a_norm[i] == 0.0 || t_norm[i] == 0.0)
      throw std::invalid_argument("infonce: zero-norm embedding");
  }

  double loss = 0.0;
  std::vector<double> cos_row(batch), p(batch);
  for (int i = 0; i < batch; ++i) {
    int pos = positives ? (*positives)[i] : i;
    const double* a = anchors + std::size_t(i) * dim;
    double smax = -1e300;
    for (int j = 0; j < batch; ++j) {
      const double* t = targets + std::size_t(j) * dim;
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += a[d] * t[d];
      cos_row[j] = dot / (a_norm[i] * t_norm[j]);
      smax = std::max(smax, cos_row[j] / tau);
    }
    double denom = 0.0;
    for (int j = 0; j < batch; ++j) denom += std::exp(cos_row[j] / tau - smax);
    double log_denom = std::log(denom) + smax;
    loss += -(cos_row[pos] / tau) + log_denom;

    if (d_anchors) {
      for (int j = 0; j < batch; ++j)
        p[j] = std::exp(cos_row[j] / tau - log_denom);
      double* da = d_anchors + std::size_t(i) * dim;
      for (int j = 0; j < batch; ++j) {
        double coeff = (p[j] - (j == pos ? 1.0 : 0.0)) * scale / (tau * batch);
        const double* t = targets + std::size_t(j) * dim;
        for (int d = 0; d < dim; ++d)
          da[d] += coeff * (t[d] / t_norm[j] - cos_row[j] * a[d] / a_norm[i]) / a_norm[i];
      }
    }
  }
  return loss / batch;
}

}  // namespace

double infonce_loss(const std::vector<std::vector<double>>& anchors,
                    const std::vector<std::vector<double>>& targets, double tau,
                    const std::vector<int>* positives) {
  if (anchors.size() != targets.size())
    throw std::invalid_argument("infonce: anchor/target count mismatch");
  int batch = static_cast<int>(anchors.size());
  if (batch < 2) throw std::invalid_argument("infonce: batch must be >= 2");
  int dim = static_cast<int>(anchors[0].size());
  std::vector<double> A(std::size_t(batch) * dim), T(std::size_t(batch) * dim);
  for (int i = 0; i < batch; ++i) {
    if (static_cast<int>(anchors[i].size()) != dim ||
        static_cast<int>(targets[i].size()) != dim)
      throw std::invalid_argument("infonce: ragged batch");
    std::copy(anchors[i].begin(), anchors[i].end(), A.begin() + std::size_t(i) * dim);
    std::copy(targets[i].begin(), targets[i].end(), T.begin() + std::size_t(i) * dim);
  }
  return infonce_core(A.data(), T.data(), batch, dim, tau, positives, nullptr, 1.0);
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(DualHorizonEstimator& model, const TrainConfig& config)
    : model_(model),
      config_(config),
      opt_short_(model.short_net, config.learning_rate),
      opt_long_(model.long_net, config.learning_rate),
      opt_target_(model.target_online, config.learning_rate) {}

namespace {

struct BatchTensors {
  int batch = 0;
  std::vector<double> X_short, X_long, F_short, F_long;
  std::vector<double> truth;  // batch x 4
};

BatchTensors gather(const std::vector<Sample>& batch, const DualHorizonEstimator& model) {
  BatchTensors t;
  t.batch = static_cast<int>(batch.size());
  for (const Sample& s : batch) {
    if (model.has_short())
      t.X_short.insert(t.X_short.end(), s.short_window.begin(), s.short_window.end());
    if (model.has_long())
      t.X_long.insert(t.X_long.end(), s.long_window.begin(), s.long_window.end());
    t.F_short.insert(t.F_short.end(), s.future_short.begin(), s.future_short.end());
    t.F_long.insert(t.F_long.end(), s.future_long.begin(), s.future_long.end());
    t.truth.insert(t.truth.end(), s.truth.begin(), s.truth.end());
  }
  return t;
}

// Column offsets of the explicit regression outputs within each net's output,
// by estimator kind: {v_x, v_y, v_z, h} -> (net, column).
struct Heads {
  // -1 marks "not produced by this net".
  int short_vz = -1, short_vx = -1, short_vy = -1, short_h = -1;
  int long_vx = -1, long_vy = -1, long_vz = -1, long_h = -1;
  int short_latent = 0, long_latent = 0;
};

Heads head_layout(const EstimatorConfig& config) {
  using Kind = EstimatorConfig::Kind;
  Heads h;
  if (config.kind == Kind::Dual) {
    h.short_vz = 0;
    h.short_latent = 1;
    h.long_vx = 0;
    h.long_vy = 1;
    h.long_h = 2;
    h.long_latent = 3;
  } else if (config.kind == Kind::ShortOnly) {
    h.short_vx = 0;
    h.short_vy = 1;
    h.short_vz = 2;
    h.short_h = 3;
    h.short_latent = 4;
  } else {
    h.long_vx = 0;
    h.long_vy = 1;
    h.long_vz = 2;
    h.long_h = 3;
    h.long_latent = 4;
  }
  return h;
}

}  // namespace

LossBreakdown Trainer::compute_gradients(const std::vector<Sample>& batch,
                                         EstimatorGradients& grads) const {
  if (batch.size() < 2) throw std::invalid_argument("train batch must be >= 2");
  const int B = static_cast<int>(batch.size());
  const Heads heads = head_layout(model_.config());
  const int lat = model_.config().latent_dim;
  BatchTensors t = gather(batch, model_);

  mlp::BatchCache cache_s, cache_l, cache_tgt_s, cache_tgt_l;
  if (model_.has_short())
    mlp::forward_batch(model_.short_net, t.X_short, B, cache_s, config_.exec);
  if (model_.has_long())
    mlp::forward_batch(model_.long_net, t.X_long, B, cache_l, config_.exec);
  mlp::forward_batch(model_.target, t.F_short, B, cache_tgt_s, config_.exec);
  mlp::forward_batch(model_.target, t.F_long, B, cache_tgt_l, config_.exec);

  // Regression loss over the explicit heads, mean over the batch.
  double loss_reg = 0.0;
  int out_s = model_.has_short() ? model_.short_net.output_dim() : 0;
  int out_l = model_.has_long() ? model_.long_net.output_dim() : 0;
  std::vector<double> dY_s(std::size_t(B) * out_s, 0.0);
  std::vector<double> dY_l(std::size_t(B) * out_l, 0.0);

  auto regress = [&](int b, int net_col, bool short_side, double truth_v) {
    if (net_col < 0) return;
    const auto& cache = short_side ? cache_s : cache_l;
    int out_dim = short_side ? out_s : out_l;
    double pred = cache.act.back()[std::size_t(b) * out_dim + net_col];
    double err = pred - truth_v;
    loss_reg += err * err;
    auto& dY = short_side ? dY_s : dY_l;
    dY[std::size_t(b) * out_dim + net_col] += config_.lambda_reg * 2.0 * err / B;
  };
  for (int b = 0; b < B; ++b) {
    double vx = t.truth[b * 4 + 0], vy = t.truth[b * 4 + 1];
    double vz = t.truth[b * 4 + 2], h = t.truth[b * 4 + 3];
    regress(b, heads.short_vx, true, vx);
    regress(b, heads.short_vy, true, vy);
    regress(b, heads.short_vz, true, vz);
    regress(b, heads.short_h, true, h);
    regress(b, heads.long_vx, false, vx);
    regress(b, heads.long_vy, false, vy);
    regress(b, heads.long_vz, false, vz);
    regress(b, heads.long_h, false, h);
  }
  loss_reg /= B;

  // Contrastive losses: branch latents against the EMA target's embeddings of
  // the future observations. Gradient flows into the anchors only.
  double loss_s = 0.0, loss_l = 0.0;
  std::vector<double> latents(std::size_t(B) * lat);
  std::vector<double> d_latents(std::size_t(B) * lat);
  auto branch_contrast = [&](bool short_side) {
    const auto& cache = short_side ? cache_s : cache_l;
    const auto& cache_tgt = short_side ? cache_tgt_s : cache_tgt_l;
    int out_dim = short_side ? out_s : out_l;
    int lat_col = short_side ? heads.short_latent : heads.long_latent;
    double lambda = short_side ? config_.lambda_s : config_.lambda_l;
    for (int b = 0; b < B; ++b)
      std::copy_n(cache.act.back().begin() + std::size_t(b) * out_dim + lat_col, lat,
                  latents.begin() + std::size_t(b) * lat);
    std::fill(d_latents.begin(), d_latents.end(), 0.0);
    double loss = infonce_core(latents.data(), cache_tgt.act.back().data(), B, lat,
                               config_.tau, nullptr, d_latents.data(), lambda);
    auto& dY = short_side ? dY_s : dY_l;
    for (int b = 0; b < B; ++b)
      for (int d = 0; d < lat; ++d)
        dY[std::size_t(b) * out_dim + lat_col + d] += d_latents[std::size_t(b) * lat + d];
    return loss;
  };
  if (model_.has_short()) loss_s = branch_contrast(true);
  if (model_.has_long()) loss_l = branch_contrast(false);

  grads.short_net = mlp::Gradients{};
  grads.long_net = mlp::Gradients{};
  if (model_.has_short())
    mlp::backward_batch(model_.short_net, cache_s, dY_s, grads.short_net, config_.exec);
  if (model_.has_long())
    mlp::backward_batch(model_.long_net, cache_l, dY_l, grads.long_net, config_.exec);

  // Alignment loss for the online copy of the target encoder: its embeddings
  // of the future observations are pulled toward the (stop-grad) branch
  // latents, and the EMA target follows the online copy. The reported L_s/L_l
  // stay exactly the formula above.
  mlp::BatchCache cache_on_s, cache_on_l;
  mlp::forward_batch(model_.target_online, t.F_short, B, cache_on_s, config_.exec);
  mlp::forward_batch(model_.target_online, t.F_long, B, cache_on_l, config_.exec);
  grads.target_online = mlp::Gradients::zeros_like(model_.target_online);
  auto align = [&](bool short_side) {
    const auto& cache = short_side ? cache_s : cache_l;
    const auto& cache_on = short_side ? cache_on_s : cache_on_l;
    int out_dim = short_side ? out_s : out_l;
    int lat_col = short_side ? heads.short_latent : heads.long_latent;
    double lambda = short_side ? config_.lambda_s : config_.lambda_l;
    if (lambda == 0.0) return;
    for (int b = 0; b < B; ++b)
      std::copy_n(cache.act.back().begin() + std::size_t(b) * out_dim + lat_col, lat,
                  latents.begin() + std::size_t(b) * lat);
    std::vector<double> d_on(std::size_t(B) * lat, 0.0);
    infonce_core(cache_on.act.back().data(), latents.data(), B, lat, config_.tau,
                 nullptr, d_on.data(), lambda);
    mlp::Gradients g;
    mlp::backward_batch(model_.target_online, cache_on, d_on, g, config_.exec);
    for (std::size_t l = 0; l < g.W.size(); ++l) {
      for (std::size_t i = 0; i < g.W[l].size(); ++i)
        grads.target_online.W[l][i] += g.W[l][i];
      for (std::size_t i = 0; i < g.b[l].size(); ++i)
        grads.target_online.b[l][i] += g.b[l][i];
    }
  };
  if (model_.has_short()) align(true);
  if (model_.has_long()) align(false);

  LossBreakdown losses;
  losses.reg = loss_reg;
  losses.contrast_s = loss_s;
  losses.contrast_l = loss_l;
  losses.total = config_.lambda_reg * loss_reg + config_.lambda_s * loss_s +
                 config_.lambda_l * loss_l;
  return losses;
}

LossBreakdown Trainer::compute_losses(const std::vector<Sample>& batch) const {
  EstimatorGradients scratch;
  return compute_gradients(batch, scratch);
}

LossBreakdown Trainer::train_step(const std::vector<Sample>& batch) {
  EstimatorGradients grads;
  LossBreakdown losses = compute_gradients(batch, grads);
  if (!std::isfinite(losses.total) || !std::isfinite(losses.reg) ||
      !std::isfinite(losses.contrast_s) || !std::isfinite(losses.contrast_l))
    throw std::runtime_error("train_step: non-finite loss (reg=" +
                             std::to_string(losses.reg) + ", L_s=" +
                             std::to_string(losses.contrast_s) + ", L_l=" +
                             std::to_string(losses.contrast_l) + ")");
  if (model_.has_short()) opt_short_.step(model_.short_net, grads.short_net);
  if (model_.has_long()) opt_long_.step(model_.long_net, grads.long_net);
  opt_target_.step(model_.target_online, grads.target_online);
  mlp::ema_update(model_.target, model_.target_online, config_.target_update);
  ++steps_;
  return losses;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

std::size_t Dataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.obs.size();
  return n;
}

Sample make_sample(const Episode& episode, int t, const EstimatorConfig& config,
                   int delta_s, int delta_l) {
  int len = static_cast<int>(episode.obs.size());
  if (t < 0 || t + std::max(delta_s, delta_l) >= len)
    throw std::out_of_range("make_sample: step outside valid range");
  auto frame = [&](int idx) -> const sim::Observation& {
    return episode.obs[std::max(0, idx)];
  };
  Sample s;
  s.short_window.reserve(kShortInput);
  for (int k = kShortFrames - 1; k >= 0; --k) append_frame(s.short_window, frame(t - k));
  if (config.truncate_long_input) {
    s.long_window.reserve(kShortInput);
    for (int f = kShortFrames - 1; f >= 0; --f)
      append_frame(s.long_window, frame(t - f * kLongStride));
  } else {
    s.long_window.reserve(kLongInput);
    for (int f = kLongFrames - 1; f >= 0; --f)
      append_frame(s.long_window, frame(t - f * kLongStride));
  }
  s.future_short.assign(episode.obs[t + delta_s].v.begin(), episode.obs[t + delta_s].v.end());
  s.future_long.assign(episode.obs[t + delta_l].v.begin(), episode.obs[t + delta_l].v.end());
  s.truth = episode.truth[t];
  return s;
}

BatchSampler::BatchSampler(const Dataset& data, const EstimatorConfig& config,
                           const TrainConfig& train, std::uint64_t seed)
    : data_(data), config_(config), train_(train), seed_(seed) {
  int horizon = std::max(train.delta_s, train.delta_l);
  for (int e = 0; e < static_cast<int>(data.episodes.size()); ++e) {
    int len = static_cast<int>(data.episodes[e].obs.size());
    for (int t = 0; t + horizon < len; ++t) indices_.emplace_back(e, t);
  }
  if (indices_.empty()) throw std::invalid_argument("BatchSampler: empty dataset");
  reshuffle();
}

void BatchSampler::reshuffle() {
  Rng rng(Rng::derive(seed_, std::uint64_t(epoch_)));
  for (std::size_t i = indices_.size() - 1; i > 0; --i)
    std::swap(indices_[i], indices_[rng.below(i + 1)]);
  cursor_ = 0;
  ++epoch_;
}

std::vector<Sample> BatchSampler::next_batch() {
  std::vector<Sample> batch;
  batch.reserve(train_.batch_size);
  while (static_cast<int>(batch.size()) < train_.batch_size) {
    if (cursor_ >= indices_.size()) reshuffle();
    auto [e, t] = indices_[cursor_++];
    batch.push_back(make_sample(data_.episodes[e], t, config_, train_.delta_s,
                                train_.delta_l));
  }
  return batch;
}

EvalMse evaluate(const DualHorizonEstimator& model, const Dataset& data,
                 const TrainConfig& train) {
  EvalMse mse;
  std::size_t n = 0;
  int horizon = std::max(train.delta_s, train.delta_l);
  for (const Episode& ep : data.episodes) {
    int len = static_cast<int>(ep.obs.size());
    HistoryBuffer history;
    for (int t = 0; t < len; ++t) {
      history.push(ep.obs[t]);
      if (t + horizon >= len) break;  // same index set as training
      EstimatorOutput out = model.estimate(history);
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
  }
  if (n == 0) throw std::invalid_argument("evaluate: no valid samples");
  mse.v_x /= n;
  mse.v_y /= n;
  mse.v_z /= n;
  mse.h /= n;
  return mse;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_net(std::ofstream& out, const mlp::Mlp& net) {
  std::uint32_t nd = static_cast<std::uint32_t>(net.dims.size());
  out.write(reinterpret_cast<const char*>(&nd), sizeof(nd));
  for (int d : net.dims) {
    std::uint32_t v = static_cast<std::uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  auto dump = [&out](const std::vector<double>& v) {
    for (double x : v) {
      float f = static_cast<float>(x);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  };
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    dump(net.W[l]);
    dump(net.b[l]);
  }
}

mlp::Mlp read_net(std::ifstream& in) {
  std::uint32_t nd = 0;
  in.read(reinterpret_cast<char*>(&nd), sizeof(nd));
  if (!in || nd < 2 || nd > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> dims(nd);
  for (auto& d : dims) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    d = static_cast<int>(v);
  }
  mlp::Mlp net = mlp::Mlp::create(dims, 0);
  auto slurp = [&in](std::vector<double>& v) {
    for (double& x : v) {
      float f = 0.0f;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      x = static_cast<double>(f);
    }
  };
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    slurp(net.W[l]);
    slurp(net.b[l]);
  }
  return net;
}

}  // namespace

void save_checkpoint(const DualHorizonEstimator& model, long train_steps,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write("LHCK", 4);
  std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  std::uint8_t kind = static_cast<std::uint8_t>(model.config().kind);
  std::uint8_t truncated = model.config().truncate_long_input ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&kind), 1);
  out.write(reinterpret_cast<const char*>(&truncated), 1);
  std::uint32_t lat = static_cast<std::uint32_t>(model.config().latent_dim);
  out.write(reinterpret_cast<const char*>(&lat), sizeof(lat));
  std::uint64_t steps = static_cast<std::uint64_t>(train_steps);
  out.write(reinterpret_cast<const char*>(&steps), sizeof(steps));
  if (model.has_short()) write_net(out, model.short_net);
  if (model.has_long()) write_net(out, model.long_net);
  write_net(out, model.target_online);
  write_net(out, model.target);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LHCK", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  std::uint8_t kind = 0, truncated = 0;
  in.read(reinterpret_cast<char*>(&kind), 1);
  in.read(reinterpret_cast<char*>(&truncated), 1);
  std::uint32_t lat = 0;
  in.read(reinterpret_cast<char*>(&lat), sizeof(lat));
  std::uint64_t steps = 0;
  in.read(reinterpret_cast<char*>(&steps), sizeof(steps));

  EstimatorConfig config;
  config.kind = static_cast<EstimatorConfig::Kind>(kind);
  config.truncate_long_input = truncated != 0;
  config.latent_dim = static_cast<int>(lat);
  LoadedCheckpoint loaded{DualHorizonEstimator(config), static_cast<long>(steps)};
  if (loaded.model.has_short()) loaded.model.short_net = read_net(in);
  if (loaded.model.has_long()) loaded.model.long_net = read_net(in);
  loaded.model.target_online = read_net(in);
  loaded.model.target = read_net(in);
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return loaded;
}

}  // namespace lhop::estimator
