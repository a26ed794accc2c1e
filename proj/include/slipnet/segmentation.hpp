#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "slipnet/class_label.hpp"
#include "slipnet/terrain.hpp"

namespace slipnet {

// Observed class raster with the same geometry as the segmented window.
class SegmentationMap {
 public:
  SegmentationMap() = default;
  SegmentationMap(double width_m, double height_m, double resolution,
                  std::vector<ClassLabel> cells);

  double width_m() const { return width_m_; }
  double height_m() const { return height_m_; }
  double resolution() const { return resolution_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<ClassLabel>& cells() const { return cells_; }
  ClassLabel cell(int row, int col) const {
    return cells_[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
                  static_cast<std::size_t>(col)];
  }
  // Label under (x, y); throws OutOfBounds outside the map.
  ClassLabel at(double x, double y) const;
  bool same_geometry(const TerrainGrid& grid) const;

  bool operator==(const SegmentationMap&) const = default;

 private:
  double width_m_ = 0.0;
  double height_m_ = 0.0;
  double resolution_ = 1.0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<ClassLabel> cells_;
};

class AnnotationSet {
 public:
  AnnotationSet() = default;
  explicit AnnotationSet(std::set<SoilId> ids);

  // Every soil in the catalog.
  static AnnotationSet all(const SoilCatalog& catalog);
  // round(fraction * |catalog|) soils (at least one) chosen by seed; ids in
  // `always_include` are kept annotated.
  static AnnotationSet sample(const SoilCatalog& catalog, double fraction, std::uint64_t seed,
                              const std::set<SoilId>& always_include = {});

  bool contains(SoilId id) const { return ids_.contains(id); }
  const std::set<SoilId>& ids() const { return ids_; }

 private:
  std::set<SoilId> ids_;
};

struct ConfusionSpec {
  double epsilon = 0.05;  // chance of labelling an annotated cell as its nearest neighbour class
  void validate() const;
};

struct PseudoCluster {
  ClassLabel label;
  FeatureVector center{};
  std::size_t count = 0;
};

// Clusters of unannotated terrain features. Mutations must be serialized by
// the caller.
class PseudoClassRegistry {
 public:
  const std::vector<PseudoCluster>& clusters() const { return clusters_; }
  std::size_t size() const { return clusters_.size(); }
  void restore(std::vector<PseudoCluster> clusters) { clusters_ = std::move(clusters); }

 private:
  friend ClassLabel pseudo_class_assign(const FeatureVector&, PseudoClassRegistry&, double);
  std::vector<PseudoCluster> clusters_;
};

double feature_distance(const FeatureVector& a, const FeatureVector& b);

// Joins the nearest cluster when its centre lies within tau (updating the
// running-mean centre); otherwise opens cluster U<k+1> centred on `feature`.
ClassLabel pseudo_class_assign(const FeatureVector& feature, PseudoClassRegistry& registry,
                               double tau);

struct SegmentOptions {
  double tau = 0.5;
  double feature_noise_std = 0.1;  // per-cell, per-dimension
};

SegmentationMap segment(const TerrainGrid& window, const SoilCatalog& catalog,
                        const AnnotationSet& annotation, const ConfusionSpec& confusion,
                        PseudoClassRegistry& registry, const SegmentOptions& options,
                        std::mt19937_64& rng);

}  // namespace slipnet
