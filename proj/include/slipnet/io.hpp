#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipnet/eval.hpp"
#include "slipnet/rover_sim.hpp"
#include "slipnet/segmentation.hpp"
#include "slipnet/slip_risk.hpp"
#include "slipnet/slipnet_core.hpp"
#include "slipnet/terrain.hpp"

namespace slipnet::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Throws MissingInput when the file does not exist.
std::string read_text(const fs::path& path);
// Creates parent directories.
void write_text(const fs::path& path, const std::string& text);
void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes);
Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

Json to_json(const SoilSpec& s);
SoilSpec soil_from_json(const Json& j);
Json to_json(const SoilCatalog& c);
SoilCatalog catalog_from_json(const Json& j);

Json to_json(const TerrainGrid& g);
TerrainGrid terrain_from_json(const Json& j);

Json to_json(const SlipSample& s);
SlipSample sample_from_json(const Json& j);

// One JSON object per line.
std::string samples_to_jsonl(const std::vector<SlipSample>& samples);
std::vector<SlipSample> samples_from_jsonl(const std::string& text);

inline constexpr const char* kSampleCsvHeader =
    "t,x,y,soil_true,class_observed,v_ref,v_x,slip,wheel,trajectory_id,terrain_id";
std::string samples_to_csv(const std::vector<SlipSample>& samples);
std::vector<SlipSample> samples_from_csv(const std::string& text);

// Format chosen by extension: .jsonl or .csv.
void write_samples(const fs::path& path, const std::vector<SlipSample>& samples);
std::vector<SlipSample> read_samples(const fs::path& path);

Json to_json(const GaussianBasisModel& m);
GaussianBasisModel basis_model_from_json(const Json& j);

Json to_json(const ClassModelConfig& c);
ClassModelConfig class_config_from_json(const Json& j);
Json to_json(const ClassSlipModel& m);
ClassSlipModel class_model_from_json(const Json& j);
Json to_json(const ModelRegistry& r);
ModelRegistry registry_from_json(const Json& j);

Json to_json(const AnnotationSet& a);
AnnotationSet annotation_from_json(const Json& j);
Json to_json(const PseudoClassRegistry& p);
PseudoClassRegistry pseudo_from_json(const Json& j);

// Registry, replay buffer and configuration: enough to resume updates.
Json to_json(const SlipNet& net);
SlipNet slipnet_from_json(const Json& j);

// Labels as strings ("S3", "U1") in row-major order.
Json to_json(const SegmentationMap& m);
SegmentationMap segmentation_from_json(const Json& j);

Json to_json(const SlipCostMap& m);
SlipCostMap cost_map_from_json(const Json& j);

// Grid and segmentation included.
Json to_json(const TerrainInstance& t);
TerrainInstance terrain_instance_from_json(const Json& j);

Json to_json(const TrajectoryInfo& t);
Json to_json(const UnseenSoilResult& r);
Json to_json(const BenchmarkReport& r);
Json to_json(const SoilCurve& c);

// Scatter CSV: speed,slip
std::string curve_scatter_csv(const SoilCurve& c);

// Binary PGM (P5). Images put row 0 of the raster at the bottom, so north is up.
std::vector<unsigned char> encode_pgm(int width, int height, int maxval,
                                      const std::vector<int>& row_major_bottom_up);

// Pixel value = position of the soil in the catalog; maxval = catalog size - 1.
std::vector<unsigned char> terrain_pgm(const TerrainGrid& g, const SoilCatalog& catalog);

// Pixel values index the legend, which maps value -> label string.
struct SegmentationImage {
  std::vector<unsigned char> pgm;
  Json legend;
};
SegmentationImage segmentation_pgm(const SegmentationMap& m);

// Band indices 1..5, maxval 5.
std::vector<unsigned char> band_pgm(const SlipCostMap& m);

struct Rgb {
  unsigned char r = 0;
  unsigned char g = 0;
  unsigned char b = 0;
};

// Blue -> cyan -> green -> yellow -> red over slip 0 -> 1.
Rgb jet(double slip);

// Mean-slip PNG through the jet colormap. Throws std::runtime_error on
// encoder failure.
std::vector<unsigned char> cost_map_png(const SlipCostMap& m);

}  // namespace slipnet::io
