#include "lhop/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lhop/rng.hpp"

namespace lhop::terrain {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CategoryName {
  Category cat;
  const char* name;
};

constexpr CategoryName kCategoryNames[] = {
    {Category::PureFlat, "PureFlat"},
    {Category::Flat, "Flat"},
    {Category::PerlinFlat, "PerlinFlat"},
    {Category::SmoothSlope, "SmoothSlope"},
    {Category::RoughSlope, "RoughSlope"},
    {Category::PerlinSlope, "PerlinSlope"},
    {Category::DiscreteObstacles, "DiscreteObstacles"},
    {Category::Crater, "Crater"},
    {Category::PerlinCrater, "PerlinCrater"},
};

bool uses_fbm(Category c) {
  return c == Category::PerlinFlat || c == Category::PerlinSlope ||
         c == Category::PerlinCrater;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

const char* to_string(Category c) {
  for (const auto& entry : kCategoryNames)
    if (entry.cat == c) return entry.name;
  return "?";
}

Category category_from_string(const std::string& name) {
  for (const auto& entry : kCategoryNames)
    if (name == entry.name) return entry.cat;
  throw std::invalid_argument("unknown terrain category: " + name);
}

Spec make_spec(Category c, double difficulty, std::uint64_t seed, const Laws& laws) {
  Spec spec;
  spec.category = c;
  spec.difficulty = clamp01(difficulty);
  spec.seed = seed;
  spec.z_scale = uses_fbm(c) ? spec.difficulty * laws.z_max : 0.0;
  return spec;
}

// ---------------------------------------------------------------------------
// Perlin noise
// ---------------------------------------------------------------------------

Perlin::Perlin(std::uint64_t seed) {
  std::array<std::uint8_t, 256> table;
  for (int i = 0; i < 256; ++i) table[i] = static_cast<std::uint8_t>(i);
  Rng rng(seed);
  for (int i = 255; i > 0; --i) {
    int j = static_cast<int>(rng.below(std::uint64_t(i) + 1));
    std::swap(table[i], table[j]);
  }
  for (int i = 0; i < 512; ++i) perm_[i] = table[i & 255];
}

double Perlin::sample(double x, double y) const {
  // Eight unit gradient directions; with unit gradients the raw value lies in
  // [-sqrt(2)/2, sqrt(2)/2], so sqrt(2) rescales to [-1, 1].
  static const double kGx[8] = {1.0, -1.0, 0.0, 0.0,  0.70710678118654752,
                                -0.70710678118654752, 0.70710678118654752,
                                -0.70710678118654752};
  static const double kGy[8] = {0.0, 0.0, 1.0, -1.0, 0.70710678118654752,
                                0.70710678118654752, -0.70710678118654752,
                                -0.70710678118654752};

  double fx = std::floor(x);
  double fy = std::floor(y);
  int xi = static_cast<int>(fx) & 255;
  int yi = static_cast<int>(fy) & 255;
  double dx = x - fx;
  double dy = y - fy;

  auto grad = [&](int hx, int hy, double ox, double oy) {
    int h = perm_[perm_[hx & 255] + (hy & 255)] & 7;
    return kGx[h] * ox + kGy[h] * oy;
  };
  auto fade = [](double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); };
  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };

  double n00 = grad(xi, yi, dx, dy);
  double n10 = grad(xi + 1, yi, dx - 1.0, dy);
  double n01 = grad(xi, yi + 1, dx, dy - 1.0);
  double n11 = grad(xi + 1, yi + 1, dx - 1.0, dy - 1.0);

  double u = fade(dx);
  double v = fade(dy);
  double value = lerp(lerp(n00, n10, u), lerp(n01, n11, u), v);
  return value * 1.41421356237309505;
}

// ---------------------------------------------------------------------------
// fBm
// ---------------------------------------------------------------------------

Fbm::Fbm(std::uint64_t seed, double z_scale) : z_scale_(z_scale) {
  octaves_.reserve(kOctaves);
  for (int k = 0; k < kOctaves; ++k) {
    std::uint64_t octave_seed = Rng::derive(seed, std::uint64_t(k));
    Rng offset_rng(Rng::derive(seed, 0x100u + std::uint64_t(k)));
    // Per-octave lattice offset. Without it the f0=10 lattice lands exactly on
    // the 0.05 m grid nodes, where gradient noise is identically zero.
    double off_x = offset_rng.uniform(0.0, 256.0);
    double off_y = offset_rng.uniform(0.0, 256.0);
    octaves_.push_back(Octave{
        Perlin(octave_seed),
        kBaseFrequency * std::pow(kLacunarity, k),
        z_scale * std::pow(kGain, k),
        off_x,
        off_y,
    });
  }
}

double Fbm::height(double x, double y) const {
  double h = 0.0;
  for (const auto& oct : octaves_)
    h += oct.amplitude * oct.noise.sample(oct.frequency * x + oct.offset_x,
                                          oct.frequency * y + oct.offset_y);
  return h;
}

double fbm_height(double x, double y, const Spec& spec) {
  return Fbm(spec.seed, spec.z_scale).height(x, y);
}

// ---------------------------------------------------------------------------
// Crater
// ---------------------------------------------------------------------------

namespace {

struct CraterParams {
  double depth;
  double radius;
};

CraterParams crater_params(double d, const Laws& laws) {
  return {d * laws.crater_depth_max,
          laws.crater_radius_min + d * (laws.crater_radius_max - laws.crater_radius_min)};
}

}  // namespace

double crater_height(double x, double y, const Spec& spec, double center_x,
                     double center_y, const Laws& laws) {
  auto [depth, radius] = crater_params(clamp01(spec.difficulty), laws);
  double rx = x - center_x;
  double ry = y - center_y;
  double r2 = rx * rx + ry * ry;
  return -depth * std::exp(-r2 / (radius * radius));
}

// ---------------------------------------------------------------------------
// Patch generation
// ---------------------------------------------------------------------------

namespace {

// One axis-aligned box obstacle.
struct Box {
  double x0, x1, y0, y1, h;
};

std::vector<Box> make_obstacles(const Spec& spec, const Laws& laws) {
  double d = clamp01(spec.difficulty);
  int count = static_cast<int>(std::lround(d * laws.obstacle_count_max));
  std::vector<Box> boxes;
  boxes.reserve(count);
  Rng rng(Rng::derive(spec.seed, 0xB0B5u));
  for (int i = 0; i < count; ++i) {
    double cx = rng.uniform(0.0, kPatchSize);
    double cy = rng.uniform(0.0, kPatchSize);
    double hx = rng.uniform(0.15, 0.5);
    double hy = rng.uniform(0.15, 0.5);
    double h = rng.uniform(0.0, laws.obstacle_height_max * d);
    boxes.push_back(Box{cx - hx, cx + hx, cy - hy, cy + hy, h});
  }
  return boxes;
}

// Deterministic per-node hash noise in [-1, 1] for the "rough" categories.
double node_noise(std::uint64_t seed, int ix, int iy) {
  std::uint64_t h = Rng::derive(seed, (std::uint64_t(std::uint32_t(ix)) << 32) |
                                          std::uint64_t(std::uint32_t(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

struct PatchModel {
  Spec spec;
  Laws laws;
  double slope_tan = 0.0;
  double noise_amp = 0.0;
  bool has_crater = false;
  bool has_fbm = false;
  bool has_node_noise = false;
  std::vector<Box> boxes;
  const Fbm* fbm = nullptr;

  double height_at(double x, double y, int ix, int iy) const {
    double h = 0.0;
    if (slope_tan != 0.0) h += slope_tan * (x - kPatchSize / 2.0);
    if (has_crater)
      h += crater_height(x, y, spec, kPatchSize / 2.0, kPatchSize / 2.0, laws);
    if (has_fbm) h += fbm->height(x, y);
    if (has_node_noise) h += noise_amp * node_noise(spec.seed, ix, iy);
    for (const auto& b : boxes)
      if (x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1) h = std::max(h, b.h);
    return h;
  }
};

PatchModel make_model(const Spec& raw, const Laws& laws) {
  PatchModel m;
  m.spec = raw;
  m.spec.difficulty = clamp01(raw.difficulty);
  m.laws = laws;
  double d = m.spec.difficulty;
  switch (m.spec.category) {
    case Category::PureFlat:
      break;
    case Category::Flat:
    case Category::RoughSlope:
      m.has_node_noise = true;
      m.noise_amp = d * laws.noise_step_max;
      break;
    case Category::DiscreteObstacles:
      m.boxes = make_obstacles(m.spec, laws);
      break;
    default:
      break;
  }
  switch (m.spec.category) {
    case Category::SmoothSlope:
    case Category::RoughSlope:
    case Category::PerlinSlope:
      m.slope_tan = std::tan(d * laws.slope_max_deg * kPi / 180.0);
      break;
    case Category::Crater:
    case Category::PerlinCrater:
      m.has_crater = true;
      break;
    default:
      break;
  }
  m.has_fbm = uses_fbm(m.spec.category);
  return m;
}

}  // namespace

Heightfield generate_patch(const Spec& spec, double cell_size, Exec exec,
                           const Laws& laws) {
  if (!(cell_size > 0.0) || cell_size > kPatchSize)
    throw std::invalid_argument("generate_patch: invalid cell size");
  int nodes = static_cast<int>(std::lround(kPatchSize / cell_size)) + 1;
  if (nodes < 2) throw std::invalid_argument("generate_patch: resolution too coarse");

  Heightfield field;
  field.width_cells = nodes;
  field.height_cells = nodes;
  field.cell_size = cell_size;
  field.heights.assign(std::size_t(nodes) * nodes, 0.0);

  if (spec.category == Category::PureFlat) return field;

  PatchModel model = make_model(spec, laws);
  Fbm fbm(spec.seed, model.spec.z_scale);
  if (model.has_fbm) model.fbm = &fbm;

  double* out = field.heights.data();
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int iy = 0; iy < nodes; ++iy) {
    double y = iy * cell_size;
    for (int ix = 0; ix < nodes; ++ix) {
      double x = ix * cell_size;
      out[std::size_t(iy) * nodes + ix] = model.height_at(x, y, ix, iy);
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

double sample_height(const Heightfield& field, double x, double y) {
  double lx = x - field.origin_x;
  double ly = y - field.origin_y;
  if (!(lx >= 0.0) || !(ly >= 0.0) || lx > field.extent_x() || ly > field.extent_y())
    throw std::out_of_range("sample_height: query outside heightfield bounds");

  double gx = lx / field.cell_size;
  double gy = ly / field.cell_size;
  int ix = std::min(static_cast<int>(gx), field.width_cells - 2);
  int iy = std::min(static_cast<int>(gy), field.height_cells - 2);
  double tx = gx - ix;
  double ty = gy - iy;

  double h00 = field.at(ix, iy);
  double h10 = field.at(ix + 1, iy);
  double h01 = field.at(ix, iy + 1);
  double h11 = field.at(ix + 1, iy + 1);
  double h0 = h00 + tx * (h10 - h00);
  double h1 = h01 + tx * (h11 - h01);
  return h0 + ty * (h1 - h0);
}

namespace {

// Folds t into [0, extent] by mirror reflection (period 2*extent).
double mirror_fold(double t, double extent) {
  if (extent <= 0.0) return 0.0;
  double period = 2.0 * extent;
  double m = std::fmod(t, period);
  if (m < 0.0) m += period;
  return m <= extent ? m : period - m;
}

}  // namespace

double sample_height_extended(const Heightfield& field, double x, double y) {
  double lx = mirror_fold(x - field.origin_x, field.extent_x());
  double ly = mirror_fold(y - field.origin_y, field.extent_y());
  return sample_height(field, field.origin_x + lx, field.origin_y + ly);
}

// ---------------------------------------------------------------------------
// Curriculum
// ---------------------------------------------------------------------------

Proportions uniform_proportions() {
  Proportions p;
  for (const auto& entry : kCategoryNames) p[entry.cat] = 1.0 / kNumCategories;
  return p;
}

CurriculumGrid build_curriculum(std::uint64_t seed, const Proportions& proportions,
                                const Laws& laws) {
  double sum = 0.0;
  for (const auto& [cat, frac] : proportions) sum += frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("build_curriculum: proportions must sum to 1");

  // Largest-remainder apportionment of the 20 columns, ties broken by
  // category order.
  struct Quota {
    Category cat;
    int base;
    double remainder;
    int order;
  };
  std::vector<Quota> quotas;
  int assigned = 0;
  int order = 0;
  for (const auto& entry : kCategoryNames) {
    auto it = proportions.find(entry.cat);
    double frac = it == proportions.end() ? 0.0 : it->second;
    double exact = frac * CurriculumGrid::kCols;
    int base = static_cast<int>(std::floor(exact + 1e-12));
    quotas.push_back(Quota{entry.cat, base, exact - base, order++});
    assigned += base;
  }
  std::vector<int> by_remainder(quotas.size());
  std::iota(by_remainder.begin(), by_remainder.end(), 0);
  std::stable_sort(by_remainder.begin(), by_remainder.end(), [&](int a, int b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (int i = 0; assigned < CurriculumGrid::kCols; ++i, ++assigned)
    quotas[by_remainder[i % quotas.size()]].base += 1;

  std::vector<Category> columns;
  columns.reserve(CurriculumGrid::kCols);
  for (const auto& q : quotas)
    for (int i = 0; i < q.base && static_cast<int>(columns.size()) < CurriculumGrid::kCols; ++i)
      columns.push_back(q.cat);

  CurriculumGrid grid;
  for (int r = 0; r < CurriculumGrid::kRows; ++r) {
    double d = static_cast<double>(r) / (CurriculumGrid::kRows - 1);
    for (int c = 0; c < CurriculumGrid::kCols; ++c) {
      std::uint64_t cell_seed =
          Rng::derive(seed, std::uint64_t(r) * CurriculumGrid::kCols + c);
      grid.patch_specs[std::size_t(r) * CurriculumGrid::kCols + c] =
          make_spec(columns[c], d, cell_seed, laws);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  return value;
}

}  // namespace

void save_lhf(const Heightfield& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_lhf: cannot open " + path);
  out.write("LHF1", 4);
  write_pod<std::uint32_t>(out, std::uint32_t(field.width_cells));
  write_pod<std::uint32_t>(out, std::uint32_t(field.height_cells));
  write_pod<double>(out, field.cell_size);
  write_pod<double>(out, field.origin_x);
  write_pod<double>(out, field.origin_y);
  for (double h : field.heights) write_pod<float>(out, static_cast<float>(h));
  if (!out) throw std::runtime_error("save_lhf: write failed for " + path);
}

Heightfield load_lhf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_lhf: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LHF1", 4) != 0)
    throw std::runtime_error("load_lhf: bad magic in " + path);
  Heightfield field;
  field.width_cells = static_cast<int>(read_pod<std::uint32_t>(in));
  field.height_cells = static_cast<int>(read_pod<std::uint32_t>(in));
  field.cell_size = read_pod<double>(in);
  field.origin_x = read_pod<double>(in);
  field.origin_y = read_pod<double>(in);
  if (field.width_cells <= 0 || field.height_cells <= 0 || !(field.cell_size > 0.0))
    throw std::runtime_error("load_lhf: invalid header in " + path);
  std::size_t count = std::size_t(field.width_cells) * field.height_cells;
  field.heights.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    field.heights[i] = static_cast<double>(read_pod<float>(in));
  if (!in) throw std::runtime_error("load_lhf: truncated file " + path);
  return field;
}

void export_csv(const Heightfield& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  char buf[32];
  for (int iy = 0; iy < field.height_cells; ++iy) {
    for (int ix = 0; ix < field.width_cells; ++ix) {
      std::snprintf(buf, sizeof(buf), "%.9g", field.at(ix, iy));
      out << buf << (ix + 1 == field.width_cells ? '\n' : ',');
    }
  }
}

}  // namespace lhop::terrain
