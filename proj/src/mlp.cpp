#include "lhop/mlp.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lhop/rng.hpp"

namespace lhop::mlp {

double elu(double z) { return z > 0.0 ? z : std::exp(z) - 1.0; }
double elu_derivative(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

Mlp Mlp::create(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least two layer dims");
  Mlp net;
  net.dims = dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int in = dims[l], out = dims[l + 1];
    double bound = std::sqrt(6.0 / (in + out));
    std::vector<double> w(std::size_t(out) * in);
    for (double& v : w) v = rng.uniform(-bound, bound);
    net.W.push_back(std::move(w));
    net.b.emplace_back(out, 0.0);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  return n;
}

void Mlp::forward(const std::vector<double>& x, std::vector<double>& y) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("Mlp::forward: input dim mismatch");
  std::vector<double> cur = x, next;
  for (int l = 0; l < layers(); ++l) {
    int in = dims[l], out = dims[l + 1];
    next.assign(out, 0.0);
    const double* w = W[l].data();
    for (int i = 0; i < out; ++i) {
      double z = b[l][i];
      const double* row = w + std::size_t(i) * in;
      for (int j = 0; j < in; ++j) z += row[j] * cur[j];
      next[i] = (l + 1 == layers()) ? z : elu(z);
    }
    cur.swap(next);
  }
  y = cur;
}

namespace {

void prepare_cache(const Mlp& net, const std::vector<double>& X, int batch,
                   BatchCache& cache) {
  if (static_cast<int>(X.size()) != batch * net.input_dim())
    throw std::invalid_argument("forward_batch: input size mismatch");
  cache.batch = batch;
  cache.act.resize(net.layers() + 1);
  cache.pre.resize(net.layers());
  cache.act[0] = X;
  for (int l = 0; l < net.layers(); ++l) {
    cache.act[l + 1].assign(std::size_t(batch) * net.dims[l + 1], 0.0);
    cache.pre[l].assign(std::size_t(batch) * net.dims[l + 1], 0.0);
  }
}

void forward_one(const Mlp& net, BatchCache& cache, int s) {
  for (int l = 0; l < net.layers(); ++l) {
    int in = net.dims[l], out = net.dims[l + 1];
    const double* x = cache.act[l].data() + std::size_t(s) * in;
    double* z = cache.pre[l].data() + std::size_t(s) * out;
    double* a = cache.act[l + 1].data() + std::size_t(s) * out;
    const bool last = l + 1 == net.layers();
    for (int i = 0; i < out; ++i) {
      double acc = net.b[l][i];
      const double* row = net.W[l].data() + std::size_t(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * x[j];
      z[i] = acc;
      a[i] = last ? acc : elu(acc);
    }
  }
}

// delta[l]: batch x dims[l+1], the loss gradient at layer l's pre-activation.
std::vector<std::vector<double>> compute_deltas(const Mlp& net, const BatchCache& cache,
                                                const std::vector<double>& dY, bool par) {
  int batch = cache.batch;
  int L = net.layers();
  std::vector<std::vector<double>> delta(L);
  for (int l = 0; l < L; ++l)
    delta[l].assign(std::size_t(batch) * net.dims[l + 1], 0.0);
  delta[L - 1] = dY;

#pragma omp parallel for schedule(static) if (par)
  for (int s = 0; s < batch; ++s) {
    for (int l = L - 1; l > 0; --l) {
      int in = net.dims[l], out = net.dims[l + 1];
      const double* d_out = delta[l].data() + std::size_t(s) * out;
      const double* z = cache.pre[l - 1].data() + std::size_t(s) * in;
      double* d_in = delta[l - 1].data() + std::size_t(s) * in;
      for (int j = 0; j < in; ++j) {
        double acc = 0.0;
        for (int i = 0; i < out; ++i)
          acc += net.W[l][std::size_t(i) * in + j] * d_out[i];
        d_in[j] = acc * elu_derivative(z[j]);
      }
    }
  }
  return delta;
}

}  // namespace

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    g.W.emplace_back(net.W[l].size(), 0.0);
    g.b.emplace_back(net.b[l].size(), 0.0);
  }
  return g;
}

void forward_batch(const Mlp& net, const std::vector<double>& X, int batch,
                   BatchCache& cache, Exec exec) {
  prepare_cache(net, X, batch, cache);
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int s = 0; s < batch; ++s) forward_one(net, cache, s);
}

void backward_batch(const Mlp& net, const BatchCache& cache, const std::vector<double>& dY,
                    Gradients& grads, Exec exec) {
  if (static_cast<int>(dY.size()) != cache.batch * net.output_dim())
    throw std::invalid_argument("backward_batch: dY size mismatch");
  const bool par = exec == Exec::Parallel;
  auto delta = compute_deltas(net, cache, dY, par);
  grads = Gradients::zeros_like(net);
  int batch = cache.batch;

  for (int l = 0; l < net.layers(); ++l) {
    int in = net.dims[l], out = net.dims[l + 1];
    double* gW = grads.W[l].data();
    double* gb = grads.b[l].data();
    const double* act = cache.act[l].data();
    const double* del = delta[l].data();
    // Each (i, j) entry reduces over samples in index order, so the parallel
    // split over rows matches the serial reference bit for bit.
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < out; ++i) {
      double* grow = gW + std::size_t(i) * in;
      double gbias = 0.0;
      for (int s = 0; s < batch; ++s) {
        double d = del[std::size_t(s) * out + i];
        const double* a = act + std::size_t(s) * in;
        for (int j = 0; j < in; ++j) grow[j] += d * a[j];
        gbias += d;
      }
      gb[i] = gbias;
    }
  }
}

namespace reference {

void forward_batch(const Mlp& net, const std::vector<double>& X, int batch,
                   BatchCache& cache) {
  prepare_cache(net, X, batch, cache);
  for (int s = 0; s < batch; ++s) forward_one(net, cache, s);
}

void backward_batch(const Mlp& net, const BatchCache& cache, const std::vector<double>& dY,
                    Gradients& grads) {
  auto delta = compute_deltas(net, cache, dY, false);
  grads = Gradients::zeros_like(net);
  for (int l = 0; l < net.layers(); ++l) {
    int in = net.dims[l], out = net.dims[l + 1];
    for (int s = 0; s < cache.batch; ++s) {
      const double* d = delta[l].data() + std::size_t(s) * out;
      const double* a = cache.act[l].data() + std::size_t(s) * in;
      for (int i = 0; i < out; ++i) {
        for (int j = 0; j < in; ++j) grads.W[l][std::size_t(i) * in + j] += d[i] * a[j];
        grads.b[l][i] += d[i];
      }
    }
  }
}

}  // namespace reference

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    mW_.emplace_back(net.W[l].size(), 0.0);
    vW_.emplace_back(net.W[l].size(), 0.0);
    mb_.emplace_back(net.b[l].size(), 0.0);
    vb_.emplace_back(net.b[l].size(), 0.0);
  }
}

void Adam::step(Mlp& net, const Gradients& grads) {
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, t_);
  double c2 = 1.0 - std::pow(beta2_, t_);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  };
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    update(net.W[l], grads.W[l], mW_[l], vW_[l]);
    update(net.b[l], grads.b[l], mb_[l], vb_[l]);
  }
}

void ema_update(Mlp& target, const Mlp& online, double rho) {
  if (target.dims != online.dims)
    throw std::invalid_argument("ema_update: shape mismatch");
  for (std::size_t l = 0; l < target.W.size(); ++l) {
    for (std::size_t i = 0; i < target.W[l].size(); ++i)
      target.W[l][i] = rho * target.W[l][i] + (1.0 - rho) * online.W[l][i];
    for (std::size_t i = 0; i < target.b[l].size(); ++i)
      target.b[l][i] = rho * target.b[l][i] + (1.0 - rho) * online.b[l][i];
  }
}

std::uint64_t parameter_hash(const Mlp& net) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::vector<double>& v) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) {
      h ^= p[i];
      h *= 0x00000100000001b3ull;
    }
  };
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    mix(net.W[l]);
    mix(net.b[l]);
  }
  return h;
}

}  // namespace lhop::mlp
