#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lhop/parallel.hpp"

namespace lhop::terrain {

enum class Category {
  PureFlat,
  Flat,
  PerlinFlat,
  SmoothSlope,
  RoughSlope,
  PerlinSlope,
  DiscreteObstacles,
  Crater,
  PerlinCrater,
};

inline constexpr int kNumCategories = 9;

const char* to_string(Category c);
Category category_from_string(const std::string& name);

/// Generation parameters for one sub-terrain patch.
struct Spec {
  Category category = Category::PureFlat;
  double difficulty = 0.0;  // clamped to [0, 1]
  std::uint64_t seed = 0;
  double z_scale = 0.0;  // fBm base amplitude, meters
};

/// Tunable difficulty laws. Geometry parameters scale linearly with d.
struct Laws {
  double z_max = 0.10;            // fBm amplitude at d=1, meters
  double slope_max_deg = 20.0;    // max inclination at d=1
  double crater_depth_max = 0.8;  // meters
  double crater_radius_max = 2.5; // meters
  double crater_radius_min = 1.0; // keeps the profile well-defined at d=0
  double noise_step_max = 0.025;  // per-node uniform roughness at d=1, meters
  double obstacle_height_max = 0.15;  // meters, scaled by d
  int obstacle_count_max = 24;        // count at d=1
};

/// Derives a Spec for (category, difficulty, seed) with z_scale = d * z_max.
Spec make_spec(Category c, double difficulty, std::uint64_t seed,
               const Laws& laws = {});

/// Regular grid of terrain heights. Immutable after generation; safe to share
/// read-only across workers.
struct Heightfield {
  int width_cells = 0;   // node count along x
  int height_cells = 0;  // node count along y
  double cell_size = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<double> heights;  // row-major, heights[iy * width_cells + ix]

  double extent_x() const { return (width_cells - 1) * cell_size; }
  double extent_y() const { return (height_cells - 1) * cell_size; }
  double at(int ix, int iy) const { return heights[std::size_t(iy) * width_cells + ix]; }
};

/// Classic 2D gradient noise with a permutation table built from the seed.
/// Output is normalized to [-1, 1].
class Perlin {
 public:
  explicit Perlin(std::uint64_t seed);
  double sample(double x, double y) const;

 private:
  std::array<std::uint8_t, 512> perm_;
};

/// Two-octave fractal Brownian motion: sum of a_k * perlin(f_k x, f_k y) with
/// f_k = f0 * lambda^k and a_k = z_scale * gain^k. Each octave gets its own
/// seeded permutation table and lattice offset.
class Fbm {
 public:
  static constexpr int kOctaves = 2;
  static constexpr double kBaseFrequency = 10.0;
  static constexpr double kLacunarity = 2.0;
  static constexpr double kGain = 0.25;

  Fbm(std::uint64_t seed, double z_scale);
  double height(double x, double y) const;

  /// Strict bound on |height|: z_scale * (1 + gain) for two octaves.
  double amplitude_bound() const { return z_scale_ * (1.0 + kGain); }

 private:
  struct Octave {
    Perlin noise;
    double frequency;
    double amplitude;
    double offset_x, offset_y;
  };
  double z_scale_;
  std::vector<Octave> octaves_;
};

/// fBm height at a point. Convenience wrapper; batch callers should hold an
/// Fbm instance instead of rebuilding the tables per query.
double fbm_height(double x, double y, const Spec& spec);

/// Radial crater profile h(r) = -depth * exp(-(r/radius)^2) about the given
/// center, with depth/radius scaled by spec.difficulty.
double crater_height(double x, double y, const Spec& spec, double center_x,
                     double center_y, const Laws& laws = {});

inline constexpr double kPatchSize = 8.0;        // meters
inline constexpr double kDefaultCellSize = 0.05; // meters

/// Generates one 8 m x 8 m patch at the given resolution. Pure function of
/// (spec, cell_size); Exec::Parallel fills rows under OpenMP and is
/// bit-identical to the serial reference.
Heightfield generate_patch(const Spec& spec, double cell_size = kDefaultCellSize,
                           Exec exec = Exec::Parallel, const Laws& laws = {});

/// Bilinear interpolation; exact at grid nodes. Throws std::out_of_range for
/// queries outside the field.
double sample_height(const Heightfield& field, double x, double y);

/// Like sample_height but extends the field beyond its bounds by mirror
/// reflection, so episode rollouts can traverse farther than one patch
/// without hitting a discontinuity.
double sample_height_extended(const Heightfield& field, double x, double y);

/// 10 x 20 curriculum of patch specs: row r has difficulty r/9, columns are
/// apportioned to categories by the given proportions (largest remainder).
struct CurriculumGrid {
  static constexpr int kRows = 10;
  static constexpr int kCols = 20;
  std::array<Spec, kRows * kCols> patch_specs;
  double patch_size = kPatchSize;

  const Spec& at(int row, int col) const { return patch_specs[std::size_t(row) * kCols + col]; }
};

using Proportions = std::map<Category, double>;

Proportions uniform_proportions();

/// Throws std::invalid_argument if the proportions do not sum to 1 (1e-9).
CurriculumGrid build_curriculum(std::uint64_t seed,
                                const Proportions& proportions = uniform_proportions(),
                                const Laws& laws = {});

/// LHF1 binary format: magic "LHF1", u32 width, u32 height, f64 cell_size,
/// f64 origin_x, f64 origin_y, then f32 heights row-major (little-endian).
void save_lhf(const Heightfield& field, const std::string& path);
Heightfield load_lhf(const std::string& path);

/// Height matrix as CSV, one row per grid row, for quick inspection.
void export_csv(const Heightfield& field, const std::string& path);

}  // namespace lhop::terrain
