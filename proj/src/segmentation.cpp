#include "slipnet/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "slipnet/error.hpp"

namespace slipnet {

SegmentationMap::SegmentationMap(double width_m, double height_m, double resolution,
                                 std::vector<ClassLabel> cells)
    : width_m_(width_m),
      height_m_(height_m),
      resolution_(resolution),
      rows_(cells_along(height_m, resolution)),
      cols_(cells_along(width_m, resolution)),
      cells_(std::move(cells)) {
  if (cells_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_))
    throw InvalidArgument("segmentation raster size does not match its geometry");
}

ClassLabel SegmentationMap::at(double x, double y) const {
  if (!(x >= 0.0 && y >= 0.0 && x < width_m_ && y < height_m_))
    throw OutOfBounds("position outside segmentation map");
  const int col = std::min(cols_ - 1, static_cast<int>(std::floor(x / resolution_)));
  const int row = std::min(rows_ - 1, static_cast<int>(std::floor(y / resolution_)));
  return cell(row, col);
}

bool SegmentationMap::same_geometry(const TerrainGrid& grid) const {
  return rows_ == grid.rows() && cols_ == grid.cols() && resolution_ == grid.resolution();
}

AnnotationSet::AnnotationSet(std::set<SoilId> ids) : ids_(std::move(ids)) {
  if (ids_.empty()) throw InvalidArgument("annotation set must not be empty");
}

AnnotationSet AnnotationSet::all(const SoilCatalog& catalog) {
  std::set<SoilId> ids;
  for (const auto& s : catalog.soils()) ids.insert(s.id);
  return AnnotationSet(std::move(ids));
}

AnnotationSet AnnotationSet::sample(const SoilCatalog& catalog, double fraction,
                                    std::uint64_t seed, const std::set<SoilId>& always_include) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("annotation fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::max(
      1.0, std::round(fraction * static_cast<double>(catalog.size()))));
  std::set<SoilId> ids;
  for (SoilId id : always_include) {
    if (!catalog.contains(id)) throw InvalidArgument("always-annotated soil not in catalog");
    ids.insert(id);
  }
  std::vector<SoilId> pool;
  for (const auto& s : catalog.soils())
    if (!ids.contains(s.id)) pool.push_back(s.id);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; ids.size() < n && i < pool.size(); ++i) ids.insert(pool[i]);
  return AnnotationSet(std::move(ids));
}

void ConfusionSpec::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw InvalidArgument("confusion epsilon must lie in [0, 0.5)");
}

double feature_distance(const FeatureVector& a, const FeatureVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

ClassLabel pseudo_class_assign(const FeatureVector& feature, PseudoClassRegistry& registry,
                               double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("pseudo-class threshold tau must be > 0");
  auto& clusters = registry.clusters_;
  PseudoCluster* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (auto& c : clusters) {
    const double d = feature_distance(feature, c.center);
    if (d < best_d) {
      best_d = d;
      best = &c;
    }
  }
  if (best != nullptr && best_d <= tau) {
    ++best->count;
    const double w = 1.0 / static_cast<double>(best->count);
    for (std::size_t i = 0; i < feature.size(); ++i)
      best->center[i] += (feature[i] - best->center[i]) * w;
    return best->label;
  }
  PseudoCluster fresh;
  fresh.label = ClassLabel::pseudo(static_cast<std::int32_t>(clusters.size()) + 1);
  fresh.center = feature;
  fresh.count = 1;
  clusters.push_back(fresh);
  return fresh.label;
}

SegmentationMap segment(const TerrainGrid& window, const SoilCatalog& catalog,
                        const AnnotationSet& annotation, const ConfusionSpec& confusion,
                        PseudoClassRegistry& registry, const SegmentOptions& options,
                        std::mt19937_64& rng) {
  if (window.cells().empty()) throw InvalidArgument("segment: empty window");
  confusion.validate();
  if (!(options.tau > 0.0)) throw InvalidArgument("segment: tau must be > 0");
  if (!(options.feature_noise_std >= 0.0))
    throw InvalidArgument("segment: feature noise must be >= 0");

  // Feature-nearest other annotated class for every annotated soil.
  std::map<SoilId, SoilId> confuse_with;
  for (SoilId a : annotation.ids()) {
    if (!catalog.contains(a)) continue;
    double best = std::numeric_limits<double>::infinity();
    for (SoilId b : annotation.ids()) {
      if (a == b || !catalog.contains(b)) continue;
      const double d =
          feature_distance(catalog.at(a).visual_feature, catalog.at(b).visual_feature);
      if (d < best) {
        best = d;
        confuse_with[a] = b;
      }
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, options.feature_noise_std > 0.0
                                                  ? options.feature_noise_std
                                                  : 1.0);
  std::vector<ClassLabel> labels;
  labels.reserve(window.cells().size());
  for (SoilId id : window.cells()) {
    if (annotation.contains(id)) {
      SoilId out = id;
      if (confusion.epsilon > 0.0 && unit(rng) < confusion.epsilon) {
        auto it = confuse_with.find(id);
        if (it != confuse_with.end()) out = it->second;
      }
      labels.push_back(ClassLabel::annotated(out));
    } else {
      FeatureVector f = catalog.at(id).visual_feature;
      if (options.feature_noise_std > 0.0)
        for (double& x : f) x += noise(rng);
      labels.push_back(pseudo_class_assign(f, registry, options.tau));
    }
  }
  return SegmentationMap(window.width_m(), window.height_m(), window.resolution(),
                         std::move(labels));
}

}  // namespace slipnet
