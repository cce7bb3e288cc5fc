#include <doctest.h>

#include <stdexcept>
#include <fstream>

#include <cmath>
#include <filesystem>

#include "lhop/estimator.hpp"
#include "lhop/rng.hpp"

using namespace lhop;
using namespace lhop::estimator;

namespace {

sim::Observation make_obs(double fill) {
  sim::Observation o;
  for (int i = 0; i < sim::kObservationDim; ++i)
    o.v[i] = fill + 0.01 * i;
  return o;
}

sim::Observation random_obs(Rng& rng) {
  sim::Observation o;
  for (auto& v : o.v) v = rng.uniform(-1.0, 1.0);
  return o;
}

// Synthetic episode whose ground truth is a fixed linear readout of the
// current observation; learnable by both branches.
Episode synthetic_episode(std::uint64_t seed, int length) {
  Rng rng(seed);
  Episode ep;
  for (int t = 0; t < length; ++t) {
    sim::Observation o = random_obs(rng);
    ep.obs.push_back(o);
    ep.truth.push_back({0.5 * o.v[0] - 0.2 * o.v[3], 0.3 * o.v[1], 0.7 * o.v[4],
                        0.4 + 0.2 * o.v[2]});
  }
  return ep;
}

std::vector<Sample> synthetic_batch(const Dataset& data, const EstimatorConfig& config,
                                    const TrainConfig& train, std::uint64_t seed, int n) {
  BatchSampler sampler(data, config, train, seed);
  TrainConfig small = train;
  small.batch_size = n;
  BatchSampler small_sampler(data, config, small, seed);
  return small_sampler.next_batch();
}

}  // namespace

TEST_CASE("history buffer: prefill, stride, window sizes") {
  HistoryBuffer buffer;
  buffer.push(make_obs(100.0));
  // With one frame every slot clamps to it.
  std::vector<double> hs = buffer.short_window();
  REQUIRE(hs.size() == std::size_t(kShortInput));
  for (int f = 0; f < kShortFrames; ++f)
    CHECK(hs[f * sim::kObservationDim] == 100.0);
  std::vector<double> hl = buffer.long_window();
  REQUIRE(hl.size() == std::size_t(kLongInput));
  CHECK(hl[0] == 100.0);

  // Push frames labelled by index; window contents must match the spec's
  // index sets {t-5..t} and {t-42, t-39, ..., t}.
  HistoryBuffer b2;
  for (int t = 0; t <= 60; ++t) b2.push(make_obs(double(t)));
  std::vector<double> s2 = b2.short_window();
  for (int f = 0; f < kShortFrames; ++f)
    CHECK(s2[f * sim::kObservationDim] == double(60 - (kShortFrames - 1) + f));
  std::vector<double> l2 = b2.long_window();
  for (int f = 0; f < kLongFrames; ++f)
    CHECK(l2[f * sim::kObservationDim] == double(60 - kLongSpan + f * kLongStride));

  std::vector<double> lt = b2.long_window_truncated();
  REQUIRE(lt.size() == std::size_t(kShortInput));
  for (int f = 0; f < kShortFrames; ++f)
    CHECK(lt[f * sim::kObservationDim] == double(60 - (kShortFrames - 1 - f) * kLongStride));
}

TEST_CASE("encoder dimensions match the architecture") {
  EstimatorConfig config;
  config.seed = 5;
  DualHorizonEstimator model(config);
  CHECK(model.short_net.dims == std::vector<int>{270, 128, 64, 17});
  CHECK(model.long_net.dims == std::vector<int>{675, 128, 64, 19});
  CHECK(model.target.dims == std::vector<int>{45, 64, 16});

  EstimatorConfig truncated = config;
  truncated.truncate_long_input = true;
  DualHorizonEstimator literal(truncated);
  CHECK(literal.long_net.dims == std::vector<int>{270, 128, 64, 19});

  std::vector<double> window(270, 0.1);
  auto [v_z, h_s] = model.encode_short(window);
  CHECK(h_s.size() == 16);
  CHECK(std::isfinite(v_z));

  std::vector<double> long_window(675, 0.1);
  auto lo = model.encode_long(long_window);
  CHECK(lo.latent.size() == 16);

  CHECK_THROWS(model.encode_short(std::vector<double>(100, 0.0)));
}

TEST_CASE("zero weights degenerate to the bias") {
  EstimatorConfig config;
  DualHorizonEstimator model(config);
  for (auto& w : model.short_net.W) std::fill(w.begin(), w.end(), 0.0);
  model.short_net.b.back().assign(17, 0.0);
  model.short_net.b.back()[0] = 0.321;
  model.short_net.b.back()[5] = -0.5;
  auto [v_z, h_s] = model.encode_short(std::vector<double>(270, 0.77));
  CHECK(v_z == doctest::Approx(0.321));
  CHECK(h_s[4] == doctest::Approx(-0.5));
  CHECK(h_s[0] == doctest::Approx(0.0));
}

TEST_CASE("fuse: layout, size, and mismatch rejection") {
  EstimatorOutput out;
  out.v_x = 1, out.v_y = 2, out.v_z = 3, out.h = 4;
  out.h_s.assign(16, 0.5);
  out.h_l.assign(16, -0.5);
  std::vector<double> z = fuse(out);
  REQUIRE(z.size() == 36);
  CHECK(z[0] == 1);
  CHECK(z[2] == 3);
  CHECK(z[4] == 0.5);
  CHECK(z[20] == -0.5);

  // Manual concatenation agrees.
  std::vector<double> manual{out.v_x, out.v_y, out.v_z, out.h};
  manual.insert(manual.end(), out.h_s.begin(), out.h_s.end());
  manual.insert(manual.end(), out.h_l.begin(), out.h_l.end());
  CHECK(z == manual);

  out.h_l.resize(8);
  CHECK_THROWS_AS(fuse(out), std::invalid_argument);
}

TEST_CASE("regression loss values") {
  EstimatorOutput out;
  out.v_x = 1.0, out.v_y = -0.5, out.v_z = 0.25, out.h = 0.4;
  CHECK(regression_loss(out, {1.0, -0.5, 0.25, 0.4}) == 0.0);
  CHECK(regression_loss(out, {0.9, -0.6, 0.15, 0.3}) == doctest::Approx(0.04));
}

TEST_CASE("infonce: uniform batch gives log N") {
  std::vector<std::vector<double>> anchors(8, std::vector<double>(16, 0.3));
  std::vector<std::vector<double>> targets(8, std::vector<double>(16, -0.7));
  CHECK(infonce_loss(anchors, targets, 0.1) == doctest::Approx(std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("infonce: two-sample closed form") {
  std::vector<std::vector<double>> anchors(2, std::vector<double>(16, 0.0));
  std::vector<std::vector<double>> targets(2, std::vector<double>(16, 0.0));
  anchors[0][0] = 1.0;
  anchors[1][0] = -1.0;
  targets[0][0] = 1.0;
  targets[1][0] = -1.0;
  double loss = infonce_loss(anchors, targets, 0.1);
  CHECK(loss == doctest::Approx(std::log(1.0 + std::exp(-20.0))).epsilon(1e-9));
  CHECK(loss >= 0.0);
}

TEST_CASE("infonce: error paths and non-negativity") {
  std::vector<std::vector<double>> one(1, std::vector<double>(16, 1.0));
  CHECK_THROWS_AS(infonce_loss(one, one, 0.1), std::invalid_argument);

  std::vector<std::vector<double>> anchors(3, std::vector<double>(16, 0.5));
  std::vector<std::vector<double>> targets(3, std::vector<double>(16, 0.5));
  targets[1].assign(16, 0.0);  // zero norm
  CHECK_THROWS_AS(infonce_loss(anchors, targets, 0.1), std::invalid_argument);

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> a(4, std::vector<double>(16));
    std::vector<std::vector<double>> t(4, std::vector<double>(16));
    for (auto& row : a)
      for (auto& v : row) v = rng.uniform(-1, 1);
    for (auto& row : t)
      for (auto& v : row) v = rng.uniform(-1, 1);
    CHECK(infonce_loss(a, t, 0.1) >= 0.0);
  }
}

TEST_CASE("make_sample windows equal live history buffers") {
  Episode ep = synthetic_episode(3, 80);
  EstimatorConfig config;
  HistoryBuffer history;
  for (int t = 0; t < 60; ++t) history.push(ep.obs[t]);
  Sample s = make_sample(ep, 59, config, 1, 6);
  CHECK(s.short_window == history.short_window());
  CHECK(s.long_window == history.long_window());
  CHECK(s.future_short == std::vector<double>(ep.obs[60].v.begin(), ep.obs[60].v.end()));
  CHECK(s.truth == ep.truth[59]);

  // Early steps clamp history to the first frame.
  Sample early = make_sample(ep, 0, config, 1, 6);
  for (int f = 0; f < kShortFrames; ++f)
    CHECK(early.short_window[f * sim::kObservationDim] == ep.obs[0].v[0]);

  CHECK_THROWS_AS(make_sample(ep, 79, config, 1, 6), std::out_of_range);
}

TEST_CASE("train_step: zero contrastive weights reduce to pure regression") {
  Dataset data;
  data.episodes.push_back(synthetic_episode(11, 120));
  EstimatorConfig config;
  config.seed = 21;
  DualHorizonEstimator model(config);
  TrainConfig train;
  train.lambda_s = 0.0;
  train.lambda_l = 0.0;
  train.batch_size = 8;
  Trainer trainer(model, train);
  BatchSampler sampler(data, config, train, 99);
  LossBreakdown losses = trainer.train_step(sampler.next_batch());
  CHECK(losses.total == doctest::Approx(train.lambda_reg * losses.reg).epsilon(1e-12));
}

TEST_CASE("target encoder: no gradient from backprop, moves only by EMA") {
  Dataset data;
  data.episodes.push_back(synthetic_episode(13, 120));
  EstimatorConfig config;
  config.seed = 31;
  DualHorizonEstimator model(config);

  TrainConfig train;
  train.batch_size = 8;
  train.target_update = 1.0;  // EMA frozen: the target must not move at all
  Trainer trainer(model, train);
  BatchSampler sampler(data, config, train, 5);
  std::uint64_t target_hash = mlp::parameter_hash(model.target);
  std::uint64_t online_hash = mlp::parameter_hash(model.target_online);
  for (int i = 0; i < 5; ++i) trainer.train_step(sampler.next_batch());
  CHECK(mlp::parameter_hash(model.target) == target_hash);
  CHECK(mlp::parameter_hash(model.target_online) != online_hash);  // online copy learns

  // With rho < 1 the target tracks the online copy through the EMA only.
  DualHorizonEstimator model2(config);
  TrainConfig train2 = train;
  train2.target_update = 0.9;
  Trainer trainer2(model2, train2);
  BatchSampler sampler2(data, config, train2, 5);
  std::vector<Sample> batch = sampler2.next_batch();
  mlp::Mlp target_before = model2.target;
  EstimatorGradients grads;
  trainer2.compute_gradients(batch, grads);  // gradients alone must not touch it
  CHECK(mlp::parameter_hash(model2.target) == mlp::parameter_hash(target_before));
  trainer2.train_step(batch);
  mlp::Mlp expected = target_before;
  mlp::ema_update(expected, model2.target_online, 0.9);
  CHECK(mlp::parameter_hash(model2.target) == mlp::parameter_hash(expected));
}

TEST_CASE("training is deterministic under a fixed seed") {
  Dataset data;
  data.episodes.push_back(synthetic_episode(17, 150));
  EstimatorConfig config;
  config.seed = 41;
  TrainConfig train;
  train.batch_size = 8;

  auto run = [&](Exec exec) {
    DualHorizonEstimator model(config);
    TrainConfig tc = train;
    tc.exec = exec;
    Trainer trainer(model, tc);
    BatchSampler sampler(data, config, tc, 7);
    for (int i = 0; i < 10; ++i) trainer.train_step(sampler.next_batch());
    return std::tuple{mlp::parameter_hash(model.short_net),
                      mlp::parameter_hash(model.long_net),
                      mlp::parameter_hash(model.target)};
  };
  auto a = run(Exec::Serial);
  auto b = run(Exec::Serial);
  CHECK(a == b);
  // The parallel path matches the serial one bit for bit.
  auto c = run(Exec::Parallel);
  CHECK(a == c);
}

TEST_CASE("analytic gradients of L_DH match finite differences") {
  Dataset data;
  data.episodes.push_back(synthetic_episode(19, 100));
  EstimatorConfig config;
  config.seed = 51;
  DualHorizonEstimator model(config);
  TrainConfig train;
  train.batch_size = 4;
  Trainer trainer(model, train);
  BatchSampler sampler(data, config, train, 13);
  std::vector<Sample> batch = sampler.next_batch();

  EstimatorGradients grads;
  trainer.compute_gradients(batch, grads);

  const double eps = 1e-5;
  Rng pick(4711);
  auto check_net = [&](mlp::Mlp& net, const mlp::Gradients& g) {
    for (int trial = 0; trial < 40; ++trial) {
      int l = static_cast<int>(pick.below(net.layers()));
      bool weight = pick.uniform01() < 0.8;
      auto& params = weight ? net.W[l] : net.b[l];
      const auto& analytic = weight ? g.W[l] : g.b[l];
      int idx = static_cast<int>(pick.below(params.size()));
      double saved = params[idx];
      params[idx] = saved + eps;
      double lp = trainer.compute_losses(batch).total;
      params[idx] = saved - eps;
      double lm = trainer.compute_losses(batch).total;
      params[idx] = saved;
      double numeric = (lp - lm) / (2.0 * eps);
      double denom = std::max({std::abs(numeric), std::abs(analytic[idx]), 1e-7});
      CHECK(std::abs(numeric - analytic[idx]) / denom < 1e-4);
    }
  };
  check_net(model.short_net, grads.short_net);
  check_net(model.long_net, grads.long_net);
}

TEST_CASE("checkpoint round trip preserves estimates") {
  EstimatorConfig config;
  config.seed = 61;
  DualHorizonEstimator model(config);
  auto path = std::filesystem::temp_directory_path() / "lhop_test_ckpt.bin";
  save_checkpoint(model, 1234, path.string());
  LoadedCheckpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.train_steps == 1234);
  CHECK(loaded.model.config().kind == config.kind);

  HistoryBuffer history;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) history.push(random_obs(rng));
  EstimatorOutput a = model.estimate(history);
  EstimatorOutput b = loaded.model.estimate(history);
  // f32 storage: agreement to float precision.
  CHECK(a.v_z == doctest::Approx(b.v_z).epsilon(1e-5));
  CHECK(a.h == doctest::Approx(b.h).epsilon(1e-5));
  std::filesystem::remove(path);
}

TEST_CASE("short training run reduces the regression loss") {
  Dataset data;
  for (int e = 0; e < 4; ++e) data.episodes.push_back(synthetic_episode(100 + e, 200));
  EstimatorConfig config;
  config.seed = 71;
  DualHorizonEstimator model(config);
  TrainConfig train;
  train.batch_size = 32;
  Trainer trainer(model, train);
  BatchSampler sampler(data, config, train, 23);

  double first = 0.0, last = 0.0;
  const int steps = 150;
  for (int i = 0; i < steps; ++i) {
    LossBreakdown losses = trainer.train_step(sampler.next_batch());
    if (i < 10) first += losses.reg;
    if (i >= steps - 10) last += losses.reg;
  }
  CHECK(last < 0.5 * first);
}
