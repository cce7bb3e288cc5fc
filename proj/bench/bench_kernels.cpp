// Timing comparison between the serial reference kernels and their OpenMP
// counterparts: terrain patch fill and batched MLP forward/backward.
#include <chrono>
#include <cstdio>

#include "lhop/mlp.hpp"
#include "lhop/parallel.hpp"
#include "lhop/rng.hpp"
#include "lhop/terrain.hpp"

using namespace lhop;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", max_threads());
  std::printf("%-34s %12s %12s %8s\n", "kernel", "serial [ms]", "openmp [ms]", "speedup");

  {
    terrain::Spec spec = terrain::make_spec(terrain::Category::PerlinCrater, 0.8, 99);
    double serial = time_best_of(5, [&] {
      terrain::generate_patch(spec, terrain::kDefaultCellSize, Exec::Serial);
    });
    double parallel = time_best_of(5, [&] {
      terrain::generate_patch(spec, terrain::kDefaultCellSize, Exec::Parallel);
    });
    std::printf("%-34s %12.3f %12.3f %8.2f\n", "terrain fill 161x161 (2-octave)",
                serial * 1e3, parallel * 1e3, serial / parallel);
  }

  {
    mlp::Mlp net = mlp::Mlp::create({675, 128, 64, 19}, 1);
    const int batch = 256;
    Rng rng(2);
    std::vector<double> X(std::size_t(batch) * 675);
    for (double& v : X) v = rng.uniform(-1, 1);
    mlp::BatchCache cache;
    double serial = time_best_of(5, [&] {
      mlp::forward_batch(net, X, batch, cache, Exec::Serial);
    });
    double parallel = time_best_of(5, [&] {
      mlp::forward_batch(net, X, batch, cache, Exec::Parallel);
    });
    std::printf("%-34s %12.3f %12.3f %8.2f\n", "mlp forward 675-128-64-19 b=256",
                serial * 1e3, parallel * 1e3, serial / parallel);

    mlp::forward_batch(net, X, batch, cache, Exec::Parallel);
    std::vector<double> dY(std::size_t(batch) * 19);
    for (double& v : dY) v = rng.uniform(-1, 1);
    mlp::Gradients grads;
    double serial_b = time_best_of(5, [&] {
      mlp::backward_batch(net, cache, dY, grads, Exec::Serial);
    });
    double parallel_b = time_best_of(5, [&] {
      mlp::backward_batch(net, cache, dY, grads, Exec::Parallel);
    });
    std::printf("%-34s %12.3f %12.3f %8.2f\n", "mlp backward 675-128-64-19 b=256",
                serial_b * 1e3, parallel_b * 1e3, serial_b / parallel_b);
  }

  return 0;
}
