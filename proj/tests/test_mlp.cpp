#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lhop/mlp.hpp"
#include "lhop/rng.hpp"

using namespace lhop;
using namespace lhop::mlp;

namespace {

std::vector<double> random_batch(int batch, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(std::size_t(batch) * dim);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

// Scalar test loss: 0.5 * sum(y^2), so dL/dy = y.
double half_square_loss(const Mlp& net, const std::vector<double>& X, int batch) {
  BatchCache cache;
  reference::forward_batch(net, X, batch, cache);
  double loss = 0.0;
  for (double y : cache.act.back()) loss += 0.5 * y * y;
  return loss;
}

}  // namespace

TEST_CASE("mlp shapes and degenerate forward") {
  Mlp net = Mlp::create({270, 128, 64, 17}, 1);
  CHECK(net.input_dim() == 270);
  CHECK(net.output_dim() == 17);
  CHECK(net.parameter_count() == 270u * 128 + 128 + 128u * 64 + 64 + 64u * 17 + 17);

  std::vector<double> x(270, 0.5), y;
  net.forward(x, y);
  CHECK(y.size() == 17);

  std::vector<double> wrong(100, 0.0);
  CHECK_THROWS_AS(net.forward(wrong, y), std::invalid_argument);

  // Zero weights: the output equals the bias vector.
  Mlp zero = Mlp::create({8, 4, 3}, 2);
  for (auto& w : zero.W) std::fill(w.begin(), w.end(), 0.0);
  zero.b[1] = {0.5, -0.25, 1.0};
  std::vector<double> x8(8, 0.9);
  zero.forward(x8, y);
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(y[1] == doctest::Approx(-0.25));
  CHECK(y[2] == doctest::Approx(1.0));
}

TEST_CASE("batched forward equals single-sample forward") {
  Mlp net = Mlp::create({12, 16, 8, 5}, 3);
  const int batch = 7;
  std::vector<double> X = random_batch(batch, 12, 9);
  BatchCache cache;
  forward_batch(net, X, batch, cache, Exec::Parallel);
  for (int s = 0; s < batch; ++s) {
    std::vector<double> x(X.begin() + s * 12, X.begin() + (s + 1) * 12), y;
    net.forward(x, y);
    for (int i = 0; i < 5; ++i) CHECK(y[i] == cache.act.back()[s * 5 + i]);
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Mlp net = Mlp::create({45, 64, 32, 16}, 4);
  const int batch = 33;
  std::vector<double> X = random_batch(batch, 45, 10);

  BatchCache ref_cache, par_cache;
  reference::forward_batch(net, X, batch, ref_cache);
  forward_batch(net, X, batch, par_cache, Exec::Parallel);
  CHECK(ref_cache.act.back() == par_cache.act.back());

  std::vector<double> dY = random_batch(batch, 16, 11);
  Gradients ref_grads, par_grads;
  reference::backward_batch(net, ref_cache, dY, ref_grads);
  backward_batch(net, par_cache, dY, par_grads, Exec::Parallel);
  for (std::size_t l = 0; l < ref_grads.W.size(); ++l) {
    CHECK(ref_grads.W[l] == par_grads.W[l]);
    CHECK(ref_grads.b[l] == par_grads.b[l]);
  }
}

TEST_CASE("backward gradients match central finite differences") {
  Mlp net = Mlp::create({9, 12, 6, 4}, 5);
  const int batch = 5;
  std::vector<double> X = random_batch(batch, 9, 12);

  BatchCache cache;
  reference::forward_batch(net, X, batch, cache);
  std::vector<double> dY = cache.act.back();  // dL/dy = y for the half-square loss
  Gradients grads;
  reference::backward_batch(net, cache, dY, grads);

  const double eps = 1e-6;
  Rng pick(77);
  for (int trial = 0; trial < 200; ++trial) {
    int l = static_cast<int>(pick.below(net.layers()));
    bool weight = pick.uniform01() < 0.8;
    auto& params = weight ? net.W[l] : net.b[l];
    auto& analytic = weight ? grads.W[l] : grads.b[l];
    int idx = static_cast<int>(pick.below(params.size()));

    double saved = params[idx];
    params[idx] = saved + eps;
    double lp = half_square_loss(net, X, batch);
    params[idx] = saved - eps;
    double lm = half_square_loss(net, X, batch);
    params[idx] = saved;

    double numeric = (lp - lm) / (2.0 * eps);
    double denom = std::max({std::abs(numeric), std::abs(analytic[idx]), 1e-8});
    CHECK(std::abs(numeric - analytic[idx]) / denom < 1e-4);
  }
}

TEST_CASE("adam converges on a quadratic") {
  Mlp net = Mlp::create({1, 1}, 6);
  net.W[0][0] = 0.0;
  net.b[0][0] = 0.0;
  Adam opt(net, 0.1);
  // Minimize (w - 3)^2 + (b + 1)^2.
  for (int i = 0; i < 1500; ++i) {
    Gradients g = Gradients::zeros_like(net);
    g.W[0][0] = 2.0 * (net.W[0][0] - 3.0);
    g.b[0][0] = 2.0 * (net.b[0][0] + 1.0);
    opt.step(net, g);
  }
  CHECK(net.W[0][0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(net.b[0][0] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("ema update and parameter hash") {
  Mlp online = Mlp::create({4, 3}, 7);
  Mlp target = online;
  CHECK(parameter_hash(online) == parameter_hash(target));

  Mlp moved = online;
  moved.W[0][0] += 1.0;
  CHECK(parameter_hash(moved) != parameter_hash(online));

  ema_update(target, moved, 0.9);
  CHECK(target.W[0][0] == doctest::Approx(0.9 * online.W[0][0] + 0.1 * moved.W[0][0]));
  // rho = 1 leaves the target untouched.
  std::uint64_t before = parameter_hash(target);
  ema_update(target, moved, 1.0);
  CHECK(parameter_hash(target) == before);
}
