#include <doctest.h>

#include <stdexcept>
#include <map>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "lhop/rng.hpp"
#include "lhop/terrain.hpp"

using namespace lhop;
using namespace lhop::terrain;

TEST_CASE("fbm octave amplitudes and strict bound") {
  Spec spec = make_spec(Category::PerlinFlat, 1.0, 42);
  spec.z_scale = 1.0;
  Fbm fbm(spec.seed, spec.z_scale);
  // a_0 = 1.0, a_1 = 0.25 at z_scale 1 -> bound 1.25 * max|perlin| = 1.25.
  CHECK(fbm.amplitude_bound() == doctest::Approx(1.25));
  Rng rng(7);
  double max_abs = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double x = rng.uniform(-20.0, 20.0);
    double y = rng.uniform(-20.0, 20.0);
    double h = fbm.height(x, y);
    CHECK(std::isfinite(h));
    max_abs = std::max(max_abs, std::abs(h));
  }
  CHECK(max_abs <= 1.25);
  CHECK(max_abs > 0.05);  // the field is not degenerate
}

TEST_CASE("fbm zero amplitude and determinism") {
  Spec spec = make_spec(Category::PerlinFlat, 0.5, 99);
  spec.z_scale = 0.0;
  CHECK(fbm_height(1.234, 5.678, spec) == 0.0);

  spec.z_scale = 0.3;
  double a = fbm_height(3.21, 0.77, spec);
  double b = fbm_height(3.21, 0.77, spec);
  CHECK(a == b);

  Spec other = spec;
  other.seed = 100;
  CHECK(fbm_height(3.21, 0.77, other) != a);
}

TEST_CASE("perlin output range is normalized") {
  Perlin noise(5);
  Rng rng(11);
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < 200000; ++i) {
    double v = noise.sample(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0);
  CHECK(hi > 0.3);
  CHECK(lo < -0.3);
}

TEST_CASE("crater profile") {
  Laws laws;
  Spec spec = make_spec(Category::Crater, 0.5, 3);
  double cx = 4.0, cy = 4.0;
  // Center depth -D(d) with D = d * D_max = 0.5 * 0.8.
  CHECK(crater_height(cx, cy, spec, cx, cy) == doctest::Approx(-0.40).epsilon(1e-12));
  // Far from the center the profile decays below 1e-3 of the depth.
  double far = crater_height(cx + 5.0, cy + 5.0, spec, cx, cy);
  CHECK(std::abs(far) < 1e-3 * 0.40);
  // Depth is monotone in difficulty.
  double prev = 0.0;
  for (double d : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Spec s = make_spec(Category::Crater, d, 3);
    double depth = -crater_height(cx, cy, s, cx, cy, laws);
    CHECK(depth >= prev);
    prev = depth;
  }
}

TEST_CASE("generate_patch: PureFlat is all zeros") {
  Spec spec = make_spec(Category::PureFlat, 0.7, 12);
  Heightfield field = generate_patch(spec);
  CHECK(field.width_cells == 161);
  CHECK(field.height_cells == 161);
  for (double h : field.heights) CHECK(h == 0.0);
}

TEST_CASE("generate_patch: slope steepness grows with difficulty") {
  double prev_max_grad = -1.0;
  for (double d : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Spec spec = make_spec(Category::SmoothSlope, d, 5);
    Heightfield f = generate_patch(spec);
    double max_grad = 0.0;
    for (int iy = 0; iy < f.height_cells; ++iy)
      for (int ix = 0; ix + 1 < f.width_cells; ++ix)
        max_grad = std::max(max_grad,
                            std::abs(f.at(ix + 1, iy) - f.at(ix, iy)) / f.cell_size);
    CHECK(max_grad >= prev_max_grad);
    prev_max_grad = max_grad;
  }
  // d = 1 -> 20 degrees.
  CHECK(prev_max_grad == doctest::Approx(std::tan(20.0 * M_PI / 180.0)).epsilon(1e-6));
}

TEST_CASE("generate_patch: PerlinFlat height std is monotone in difficulty") {
  double prev_std = -1.0;
  for (double d : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Spec spec = make_spec(Category::PerlinFlat, d, 21);
    Fbm fbm(spec.seed, spec.z_scale);
    Rng rng(77);
    double sum = 0.0, sum2 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      double h = fbm.height(rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0));
      sum += h;
      sum2 += h * h;
    }
    double stddev = std::sqrt(std::max(0.0, sum2 / n - (sum / n) * (sum / n)));
    CHECK(stddev >= prev_std);
    prev_std = stddev;
  }
  CHECK(prev_std > 0.01);
}

TEST_CASE("generate_patch: parallel fill matches serial reference bit for bit") {
  for (Category c : {Category::PerlinFlat, Category::RoughSlope, Category::PerlinCrater,
                     Category::DiscreteObstacles}) {
    Spec spec = make_spec(c, 0.8, 1234);
    Heightfield serial = generate_patch(spec, kDefaultCellSize, Exec::Serial);
    Heightfield parallel = generate_patch(spec, kDefaultCellSize, Exec::Parallel);
    REQUIRE(serial.heights.size() == parallel.heights.size());
    for (std::size_t i = 0; i < serial.heights.size(); ++i)
      CHECK(serial.heights[i] == parallel.heights[i]);
  }
}

TEST_CASE("generate_patch: determinism and invalid resolution") {
  Spec spec = make_spec(Category::PerlinCrater, 0.6, 777);
  Heightfield a = generate_patch(spec);
  Heightfield b = generate_patch(spec);
  CHECK(a.heights == b.heights);
  CHECK_THROWS_AS(generate_patch(spec, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(generate_patch(spec, -0.5), std::invalid_argument);
}

TEST_CASE("generate_patch: continuous categories have bounded steps, no NaN") {
  for (Category c : {Category::PerlinFlat, Category::SmoothSlope, Category::PerlinSlope,
                     Category::Crater, Category::PerlinCrater}) {
    Spec spec = make_spec(c, 1.0, 31);
    Heightfield f = generate_patch(spec);
    double max_step = 0.0;
    for (int iy = 0; iy + 1 < f.height_cells; ++iy)
      for (int ix = 0; ix + 1 < f.width_cells; ++ix) {
        CHECK(std::isfinite(f.at(ix, iy)));
        max_step = std::max({max_step, std::abs(f.at(ix + 1, iy) - f.at(ix, iy)),
                             std::abs(f.at(ix, iy + 1) - f.at(ix, iy))});
      }
    CHECK(max_step < 0.5);  // 0.05 m cells; anything larger is a glitch
  }
}

TEST_CASE("sample_height: exact at nodes, linear between, bounds checked") {
  Heightfield f;
  f.width_cells = 3;
  f.height_cells = 2;
  f.cell_size = 1.0;
  f.heights = {0.0, 0.2, 0.4, 0.0, 0.2, 0.4};  // flat along y, ramp along x

  CHECK(sample_height(f, 1.0, 0.0) == 0.2);
  CHECK(sample_height(f, 1.0, 1.0) == 0.2);
  CHECK(sample_height(f, 0.5, 0.3) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(sample_height(f, 2.0, 1.0) == 0.4);  // far corner is in bounds
  CHECK_THROWS_AS(sample_height(f, -0.01, 0.0), std::out_of_range);
  CHECK_THROWS_AS(sample_height(f, 0.0, 1.01), std::out_of_range);

  // Mirror extension is continuous and in range.
  CHECK(sample_height_extended(f, -0.5, 0.0) ==
        doctest::Approx(sample_height(f, 0.5, 0.0)));
  CHECK(sample_height_extended(f, 2.5, 0.5) ==
        doctest::Approx(sample_height(f, 1.5, 0.5)));
}

TEST_CASE("build_curriculum: apportionment, difficulty rows, determinism") {
  CurriculumGrid grid = build_curriculum(99);
  // Uniform proportions over 9 categories x 20 columns -> 2 or 3 columns each.
  std::map<Category, int> counts;
  for (int c = 0; c < CurriculumGrid::kCols; ++c) counts[grid.at(0, c).category]++;
  for (const auto& [cat, n] : counts) {
    CHECK(n >= 2);
    CHECK(n <= 3);
  }
  int total = 0;
  for (const auto& [cat, n] : counts) total += n;
  CHECK(total == 20);

  for (int c = 0; c < CurriculumGrid::kCols; ++c) {
    CHECK(grid.at(0, c).difficulty == 0.0);
    CHECK(grid.at(9, c).difficulty == 1.0);
  }
  for (int r = 0; r + 1 < CurriculumGrid::kRows; ++r)
    CHECK(grid.at(r, 0).difficulty < grid.at(r + 1, 0).difficulty);

  CurriculumGrid again = build_curriculum(99);
  for (int i = 0; i < CurriculumGrid::kRows * CurriculumGrid::kCols; ++i) {
    CHECK(grid.patch_specs[i].seed == again.patch_specs[i].seed);
    CHECK(grid.patch_specs[i].category == again.patch_specs[i].category);
  }

  Proportions bad = uniform_proportions();
  bad[Category::Flat] += 0.5;
  CHECK_THROWS_AS(build_curriculum(1, bad), std::invalid_argument);
}

TEST_CASE("LHF1 round trip") {
  Spec spec = make_spec(Category::PerlinSlope, 0.4, 2024);
  Heightfield field = generate_patch(spec, 0.1);
  auto path = std::filesystem::temp_directory_path() / "lhop_test_patch.lhf";
  save_lhf(field, path.string());
  Heightfield loaded = load_lhf(path.string());
  CHECK(loaded.width_cells == field.width_cells);
  CHECK(loaded.height_cells == field.height_cells);
  CHECK(loaded.cell_size == field.cell_size);
  for (std::size_t i = 0; i < field.heights.size(); ++i)
    CHECK(loaded.heights[i] == doctest::Approx(field.heights[i]).epsilon(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("obstacles scale with difficulty and vanish at zero") {
  Spec none = make_spec(Category::DiscreteObstacles, 0.0, 8);
  Heightfield flat = generate_patch(none);
  for (double h : flat.heights) CHECK(h == 0.0);

  Spec spec = make_spec(Category::DiscreteObstacles, 1.0, 8);
  Heightfield f = generate_patch(spec);
  double max_h = 0.0;
  for (double h : f.heights) {
    CHECK(h >= 0.0);
    max_h = std::max(max_h, h);
  }
  CHECK(max_h > 0.0);
  CHECK(max_h <= 0.15 + 1e-12);
}
