#include "slipnet/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "slipnet/error.hpp"

namespace slipnet {

double SoilSpec::expected_slip(double speed) const {
  if (speed <= 0.0) return 0.0;
  return s_max * (1.0 - std::exp(-rise_rate * speed));
}

double SoilSpec::sample_slip(double speed, std::mt19937_64& rng) const {
  double s = expected_slip(speed);
  if (noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    s += noise(rng);
  }
  return std::clamp(s, 0.0, kMaxSampledSlip);
}

void SoilSpec::validate() const {
  if (!(s_max >= 0.0 && s_max <= 1.0))
    throw InvalidArgument("soil '" + name + "': s_max must lie in [0, 1]");
  if (!(rise_rate > 0.0))
    throw InvalidArgument("soil '" + name + "': rise_rate must be > 0");
  if (!(noise_std >= 0.0))
    throw InvalidArgument("soil '" + name + "': noise_std must be >= 0");
}

SoilCatalog::SoilCatalog(std::vector<SoilSpec> soils) : soils_(std::move(soils)) {
  if (soils_.empty()) throw InvalidArgument("soil catalog must not be empty");
  std::set<SoilId> seen;
  for (const auto& s : soils_) {
    s.validate();
    if (!seen.insert(s.id).second)
      throw InvalidArgument("duplicate soil id " + std::to_string(s.id));
  }
}

bool SoilCatalog::contains(SoilId id) const {
  return std::any_of(soils_.begin(), soils_.end(),
                     [id](const SoilSpec& s) { return s.id == id; });
}

const SoilSpec& SoilCatalog::at(SoilId id) const {
  for (const auto& s : soils_)
    if (s.id == id) return s;
  throw InvalidArgument("unknown soil id " + std::to_string(id));
}

SoilCatalog SoilCatalog::subset(const std::vector<SoilId>& ids) const {
  std::vector<SoilSpec> out;
  out.reserve(ids.size());
  for (SoilId id : ids) out.push_back(at(id));
  return SoilCatalog(std::move(out));
}

SoilCatalog default_catalog() {
  // Features sit near even-parity vertices of {0.1, 0.9}^4 so every pair is
  // at least ~1.0 apart in feature space.
  return SoilCatalog({
      {0, "lunar_mare_fines", 0.38, 4.0, 0.030, {0.12, 0.10, 0.14, 0.08}, 30.0, 0.9, 820.0},
      {1, "lunar_highland_coarse", 0.18, 7.0, 0.020, {0.10, 0.13, 0.88, 0.91}, 38.0, 1.6, 1450.0},
      {2, "lunar_compacted_regolith", 0.10, 9.0, 0.015, {0.14, 0.90, 0.09, 0.87}, 44.0, 2.4, 2600.0},
      {3, "lunar_loose_dust", 0.52, 3.0, 0.035, {0.09, 0.86, 0.91, 0.12}, 26.0, 0.3, 450.0},
      {4, "desert_sand", 0.68, 6.0, 0.040, {0.90, 0.11, 0.12, 0.86}, 28.0, 0.1, 380.0},
      {5, "gravel", 0.06, 10.0, 0.010, {0.87, 0.12, 0.90, 0.10}, 42.0, 0.0, 3100.0},
      {6, "clay_loam", 0.28, 5.0, 0.025, {0.91, 0.88, 0.10, 0.11}, 22.0, 12.0, 1200.0},
      {7, "beach_sand", 0.45, 5.0, 0.030, {0.88, 0.91, 0.89, 0.90}, 32.0, 0.5, 900.0},
  });
}

std::string to_string(TerrainPattern p) {
  switch (p) {
    case TerrainPattern::kStripes: return "stripes";
    case TerrainPattern::kVoronoiPatches: return "voronoi_patches";
    case TerrainPattern::kCheckerboard: return "checkerboard";
  }
  return "unknown";
}

TerrainPattern pattern_from_string(const std::string& s) {
  if (s == "stripes") return TerrainPattern::kStripes;
  if (s == "voronoi_patches" || s == "voronoi") return TerrainPattern::kVoronoiPatches;
  if (s == "checkerboard") return TerrainPattern::kCheckerboard;
  throw InvalidArgument("unknown terrain pattern '" + s + "'");
}

int cells_along(double extent_m, double resolution) {
  if (!(extent_m > 0.0) || !(resolution > 0.0))
    throw InvalidArgument("terrain dimensions and resolution must be > 0");
  const double n = std::round(extent_m / resolution);
  if (n < 1.0) throw InvalidArgument("terrain extent is smaller than one cell");
  return static_cast<int>(n);
}

TerrainGrid::TerrainGrid(double width_m, double height_m, double resolution,
                         std::vector<SoilId> cells)
    : width_m_(width_m),
      height_m_(height_m),
      resolution_(resolution),
      cols_(cells_along(width_m, resolution)),
      rows_(cells_along(height_m, resolution)),
      cells_(std::move(cells)) {
  if (cells_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_))
    throw InvalidArgument("terrain raster size does not match its geometry");
}

std::pair<int, int> TerrainGrid::cell_of(double x, double y) const {
  if (!contains(x, y))
    throw OutOfBounds("position (" + std::to_string(x) + ", " + std::to_string(y) +
                      ") outside terrain");
  const int col = std::min(cols_ - 1, static_cast<int>(std::floor(x / resolution_)));
  const int row = std::min(rows_ - 1, static_cast<int>(std::floor(y / resolution_)));
  return {row, col};
}

std::pair<double, double> TerrainGrid::cell_center(int row, int col) const {
  return {(col + 0.5) * resolution_, (row + 0.5) * resolution_};
}

TerrainGrid TerrainGrid::window(int row0, int col0, int rows, int cols) const {
  if (rows <= 0 || cols <= 0 || row0 < 0 || col0 < 0 || row0 + rows > rows_ ||
      col0 + cols > cols_)
    throw OutOfBounds("terrain window outside grid");
  std::vector<SoilId> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = row0; r < row0 + rows; ++r)
    for (int c = col0; c < col0 + cols; ++c) out.push_back(cell(r, c));
  return TerrainGrid(cols * resolution_, rows * resolution_, resolution_, std::move(out));
}

namespace {

std::vector<SoilId> stripes(const SoilCatalog& catalog, int rows, int cols,
                            double resolution, double stripe_width_m) {
  const int band = std::max(1, static_cast<int>(std::lround(stripe_width_m / resolution)));
  std::vector<SoilId> cells(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      cells[static_cast<std::size_t>(r) * cols + c] =
          catalog.soils()[static_cast<std::size_t>(c / band) % catalog.size()].id;
  return cells;
}

std::vector<SoilId> checkerboard(const SoilCatalog& catalog, int rows, int cols,
                                 double resolution, double tile_m) {
  // Tiles never exceed half the shorter side, so every board has at least
  // two tiles per axis.
  const int cap = std::max(1, std::min(rows, cols) / 2);
  const int tile = std::clamp(static_cast<int>(std::lround(tile_m / resolution)), 1, cap);
  std::vector<SoilId> cells(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      cells[static_cast<std::size_t>(r) * cols + c] =
          catalog.soils()[static_cast<std::size_t>(r / tile + c / tile) % catalog.size()].id;
  return cells;
}

std::vector<SoilId> voronoi(std::uint64_t seed, const SoilCatalog& catalog, int rows,
                            int cols, double resolution, int sites) {
  if (sites < 1) throw InvalidArgument("voronoi_patches needs at least one site");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, cols * resolution);
  std::uniform_real_distribution<double> uy(0.0, rows * resolution);

  // Sites cycle through a seeded permutation of the catalog so that any
  // K >= 2 terrain mixes at least two soils.
  std::vector<std::size_t> order(catalog.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  struct Site {
    double x, y;
    SoilId soil;
  };
  std::vector<Site> pts;
  pts.reserve(static_cast<std::size_t>(sites));
  for (int k = 0; k < sites; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    pts.push_back({x, y, catalog.soils()[order[static_cast<std::size_t>(k) % order.size()]].id});
  }

  std::vector<SoilId> cells(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    const double cy = (r + 0.5) * resolution;
    for (int c = 0; c < cols; ++c) {
      const double cx = (c + 0.5) * resolution;
      double best = std::numeric_limits<double>::infinity();
      SoilId id = pts.front().soil;
      for (const auto& p : pts) {
        const double d = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
        if (d < best) {
          best = d;
          id = p.soil;
        }
      }
      cells[static_cast<std::size_t>(r) * cols + c] = id;
    }
  }
  return cells;
}

}  // namespace

TerrainGrid generate_terrain(std::uint64_t seed, const SoilCatalog& catalog,
                             TerrainPattern pattern, double width_m, double height_m,
                             double resolution, const PatternParams& params) {
  if (catalog.size() == 0) throw InvalidArgument("soil catalog must not be empty");
  const int cols = cells_along(width_m, resolution);
  const int rows = cells_along(height_m, resolution);
  std::vector<SoilId> cells;
  switch (pattern) {
    case TerrainPattern::kStripes:
      cells = stripes(catalog, rows, cols, resolution, params.stripe_width_m);
      break;
    case TerrainPattern::kCheckerboard:
      cells = checkerboard(catalog, rows, cols, resolution, params.tile_m);
      break;
    case TerrainPattern::kVoronoiPatches:
      cells = voronoi(seed, catalog, rows, cols, resolution, params.voronoi_sites);
      break;
  }
  return TerrainGrid(width_m, height_m, resolution, std::move(cells));
}

SoilId soil_at(const TerrainGrid& grid, double x, double y) {
  const auto [row, col] = grid.cell_of(x, y);
  return grid.cell(row, col);
}

void validate_terrain(const TerrainGrid& grid, const SoilCatalog& catalog) {
  std::set<SoilId> ids(grid.cells().begin(), grid.cells().end());
  for (SoilId id : ids)
    if (!catalog.contains(id))
      throw InvalidArgument("terrain cell references unknown soil id " + std::to_string(id));
}

}  // namespace slipnet
