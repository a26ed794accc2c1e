#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace slipnet {

using SoilId = std::int32_t;
using FeatureVector = std::array<double, 4>;

// Ground-truth slip response of one soil plus the visual signature seen by
// the segmentation proxy. friction_angle/cohesion/stiffness are metadata.
struct SoilSpec {
  SoilId id = 0;
  std::string name;
  double s_max = 0.0;      // slip asymptote, [0, 1]
  double rise_rate = 1.0;  // 1/(m/s)
  double noise_std = 0.0;
  FeatureVector visual_feature{};
  double friction_angle_deg = 0.0;
  double cohesion_kpa = 0.0;
  double stiffness_modulus_kpa = 0.0;

  // E[s](v) = s_max * (1 - exp(-rise_rate * v)); zero for v <= 0.
  double expected_slip(double speed) const;

  // clamp(E[s](v) + N(0, noise_std), 0, kMaxSampledSlip)
  double sample_slip(double speed, std::mt19937_64& rng) const;

  void validate() const;
};

inline constexpr double kMaxSampledSlip = 0.95;

class SoilCatalog {
 public:
  SoilCatalog() = default;
  explicit SoilCatalog(std::vector<SoilSpec> soils);

  const std::vector<SoilSpec>& soils() const { return soils_; }
  std::size_t size() const { return soils_.size(); }
  bool contains(SoilId id) const;
  const SoilSpec& at(SoilId id) const;

  // Sub-catalog keeping the original ids, in the order given.
  SoilCatalog subset(const std::vector<SoilId>& ids) const;

 private:
  std::vector<SoilSpec> soils_;
};

// Eight soils: four lunar regolith analogs and four terrestrial soils.
SoilCatalog default_catalog();

// Index of the soil named "desert_sand" in the default catalog.
inline constexpr SoilId kDesertSandId = 4;

enum class TerrainPattern { kStripes, kVoronoiPatches, kCheckerboard };

std::string to_string(TerrainPattern p);
TerrainPattern pattern_from_string(const std::string& s);

struct PatternParams {
  double stripe_width_m = 2.5;
  double tile_m = 2.0;  // capped at half the shorter side
  int voronoi_sites = 12;
};

class TerrainGrid {
 public:
  TerrainGrid() = default;
  TerrainGrid(double width_m, double height_m, double resolution,
              std::vector<SoilId> cells);

  double width_m() const { return width_m_; }
  double height_m() const { return height_m_; }
  double resolution() const { return resolution_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  const std::vector<SoilId>& cells() const { return cells_; }

  // Row 0 is y in [0, resolution); column 0 is x in [0, resolution).
  SoilId cell(int row, int col) const { return cells_[index(row, col)]; }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }
  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < width_m_ && y < height_m_;
  }
  // Cell containing (x, y); throws OutOfBounds outside the grid.
  std::pair<int, int> cell_of(double x, double y) const;
  std::pair<double, double> cell_center(int row, int col) const;

  // Sub-window [row0, row0+rows) x [col0, col0+cols) as its own grid.
  TerrainGrid window(int row0, int col0, int rows, int cols) const;

  bool operator==(const TerrainGrid&) const = default;

 private:
  double width_m_ = 0.0;
  double height_m_ = 0.0;
  double resolution_ = 1.0;
  int cols_ = 0;
  int rows_ = 0;
  std::vector<SoilId> cells_;
};

// Cell count per axis: round(extent / resolution). Throws InvalidArgument on
// non-positive input or when resolution does not divide the extent to
// within one cell.
int cells_along(double extent_m, double resolution);

TerrainGrid generate_terrain(std::uint64_t seed, const SoilCatalog& catalog,
                             TerrainPattern pattern, double width_m,
                             double height_m, double resolution,
                             const PatternParams& params = {});

SoilId soil_at(const TerrainGrid& grid, double x, double y);

// Throws InvalidArgument if any cell holds an id missing from the catalog.
void validate_terrain(const TerrainGrid& grid, const SoilCatalog& catalog);

}  // namespace slipnet
