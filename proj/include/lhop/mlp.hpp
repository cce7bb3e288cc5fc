#pragma once

#include <cstdint>
#include <vector>

#include "lhop/parallel.hpp"

namespace lhop::mlp {

/// Fully-connected network with ELU hidden activations and a linear output
/// layer. Weights are stored row-major per layer: W[l] is dims[l+1] x dims[l].
struct Mlp {
  std::vector<int> dims;
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static Mlp create(const std::vector<int>& dims, std::uint64_t seed);

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layers() const { return static_cast<int>(dims.size()) - 1; }
  std::size_t parameter_count() const;

  /// Single-sample forward; y must have output_dim() elements. Throws on
  /// input size mismatch.
  void forward(const std::vector<double>& x, std::vector<double>& y) const;
};

double elu(double z);
double elu_derivative(double z);

/// Per-layer activations kept for the backward pass. act[0] is the input
/// batch; act[l] and pre[l] are the post-/pre-activation outputs of layer l-1.
struct BatchCache {
  int batch = 0;
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> pre;
};

/// Batched forward. X is batch x input_dim row-major. The parallel path is
/// bit-identical to the serial one (samples are independent).
void forward_batch(const Mlp& net, const std::vector<double>& X, int batch,
                   BatchCache& cache, Exec exec = Exec::Parallel);

struct Gradients {
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static Gradients zeros_like(const Mlp& net);
};

/// Batched backward from dY = dL/d(output), batch x output_dim. Gradients are
/// summed over the batch (callers fold any 1/B into dY). The parallel path
/// computes each gradient entry as a fixed-order reduction over samples, so
/// it is bit-identical to reference::backward_batch.
void backward_batch(const Mlp& net, const BatchCache& cache, const std::vector<double>& dY,
                    Gradients& grads, Exec exec = Exec::Parallel);

namespace reference {
/// Textbook serial implementations kept as the oracle for the OpenMP kernels.
void forward_batch(const Mlp& net, const std::vector<double>& X, int batch,
                   BatchCache& cache);
void backward_batch(const Mlp& net, const BatchCache& cache, const std::vector<double>& dY,
                    Gradients& grads);
}  // namespace reference

/// Adaptive-moment optimizer over one network's parameters.
class Adam {
 public:
  Adam(const Mlp& net, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(Mlp& net, const Gradients& grads);
  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> mW_, vW_, mb_, vb_;
};

/// target <- rho * target + (1 - rho) * online. Shapes must match.
void ema_update(Mlp& target, const Mlp& online, double rho);

/// FNV-1a over the raw parameter bytes; used by determinism tests.
std::uint64_t parameter_hash(const Mlp& net);

}  // namespace lhop::mlp
