#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "slipnet/rover_sim.hpp"
#include "slipnet/segmentation.hpp"
#include "slipnet/slipnet_core.hpp"
#include "slipnet/terrain.hpp"

namespace slipnet {

// splitmix64 mix of (seed, stream, index); stable sub-seeds for each scenario.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

struct DatasetSpec {
  std::size_t n_trajectories = 24;
  std::size_t n_test_trajectories = 5;
  std::size_t n_train_terrains = 6;
  double width_m = 20.0;
  double height_m = 20.0;
  double resolution = 0.1;
  std::size_t total_samples = 10080;
  double train_fraction = 0.8;
  double annotation_fraction = 0.7;
  double train_speed_min = 0.1;  // commanded body speed, m/s
  double train_speed_max = 0.5;
  double test_speed_min = 0.3;
  double test_speed_max = 0.5;
  double waypoint_margin_m = 1.5;
  double min_leg_m = 3.0;

  RoverParams rover;
  PdGains gains;
  PathOptions path;
  PatternParams pattern;
  ConfusionSpec confusion;
  SegmentOptions segment;

  void validate() const;
  std::size_t train_target() const;  // round(total * train_fraction)
  std::size_t test_target() const { return total_samples - train_target(); }
};

enum class Split { kTrain, kTest };
std::string to_string(Split s);

struct TerrainInstance {
  std::int32_t id = 0;
  std::string name;
  Split split = Split::kTrain;
  TerrainPattern pattern = TerrainPattern::kStripes;
  std::uint64_t seed = 0;
  std::vector<SoilId> soils;  // in pattern order
  TerrainGrid grid;
  SegmentationMap segmentation;
};

struct TrajectoryInfo {
  std::int32_t id = 0;
  std::int32_t terrain_id = 0;
  Split split = Split::kTrain;
  double commanded_speed = 0.0;
  std::vector<Waypoint> waypoints;
  Termination termination = Termination::kDuration;
  std::size_t n_logged = 0;  // wheel samples produced
  std::size_t n_kept = 0;    // after quota truncation
};

struct Dataset {
  AnnotationSet annotation;
  PseudoClassRegistry pseudo;
  std::vector<TerrainInstance> terrains;  // train terrains first, then the five test terrains
  std::vector<TrajectoryInfo> trajectories;
  std::vector<SlipSample> train;
  std::vector<SlipSample> test;

  const TerrainInstance& terrain(std::int32_t id) const;
  std::vector<std::int32_t> test_terrain_ids() const;
};

// Soil named "desert_sand", else the soil with the highest expected slip at
// 0.4 m/s.
SoilId find_desert_sand(const SoilCatalog& catalog);

// Annotation set for a run: annotation_fraction of the catalog by seed, with
// the desert-sand soil always annotated.
AnnotationSet dataset_annotation(const DatasetSpec& spec, const SoilCatalog& catalog,
                                 std::uint64_t seed);

// Train and test terrains with their segmentation maps. Train terrains use
// annotated soils only. Test terrains: stripes, voronoi patches and
// checkerboard over the whole catalog, a two-soil unannotated mix, and
// desert sand alone.
std::vector<TerrainInstance> dataset_terrains(const DatasetSpec& spec, const SoilCatalog& catalog,
                                              const AnnotationSet& annotation,
                                              PseudoClassRegistry& pseudo, std::uint64_t seed);

// Random waypoint chain inside the margin box with total length >= min_length.
std::vector<Waypoint> random_waypoints(std::mt19937_64& rng, double width_m, double height_m,
                                       double margin_m, double min_leg_m, double min_length_m);

// Runs follow_path on the seeded terrains until both sample targets are met.
// Every trajectory lies wholly on one side of the split. Throws
// BudgetExceeded when the trajectories cannot supply the targets.
Dataset generate_dataset(const DatasetSpec& spec, const SoilCatalog& catalog, std::uint64_t seed);

// Per-wheel samples of a trajectory labelled with the observed class.
std::vector<SlipSample> label_samples(const Trajectory& traj, const SegmentationMap& seg,
                                      std::int32_t trajectory_id, std::int32_t terrain_id);

enum class Variant { kOracle, kPriorOnly, kClassAgnostic, kPipeline, kPipelineOnline };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
inline constexpr Variant kAllVariants[] = {Variant::kOracle, Variant::kPriorOnly,
                                           Variant::kClassAgnostic, Variant::kPipeline,
                                           Variant::kPipelineOnline};

struct Prediction {
  double mean = 0.0;
  double sigma = 0.0;
};

// Everything a variant may consult. `agnostic` is one basis model fitted to
// all training samples regardless of class.
struct EvalContext {
  const SoilCatalog* catalog = nullptr;
  const SlipNet* net = nullptr;
  std::optional<GaussianBasisModel> agnostic;
  double agnostic_sigma = 0.0;
};

EvalContext make_eval_context(const SoilCatalog& catalog, const SlipNet& net,
                              std::span<const SlipSample> train);

// Predictions for samples in order. Oracle: planted curve of the true soil.
// PriorOnly: prior mean and sigma everywhere. Pipeline: trained registry,
// frozen. PipelineOnline: each sample is predicted, then fed to a copy of the
// trained SlipNet.
std::vector<Prediction> predict(Variant variant, const EvalContext& ctx,
                                std::span<const SlipSample> samples);

struct TerrainMae {
  std::int32_t terrain_id = 0;
  std::size_t n = 0;
  double mae = 0.0;
};

struct MaeResult {
  std::vector<TerrainMae> terrains;
  std::vector<std::string> notices;  // skipped empty groups
};

// MAE per terrain, for the listed terrain ids, in that order.
MaeResult evaluate_mae(Variant variant, const EvalContext& ctx,
                       std::span<const SlipSample> test, std::span<const std::int32_t> terrain_ids);

struct CalibrationReport {
  double within_1sigma = 0.0;
  double within_2sigma = 0.0;
  std::size_t n = 0;
};

// Fractions of measurements with |m - s| <= k sigma. Throws on empty or
// mismatched input.
CalibrationReport calibration_report(std::span<const Prediction> predictions,
                                     std::span<const double> measurements);

struct CurvePoint {
  double speed = 0.0;
  double planted = 0.0;
  double fitted = 0.0;
};

struct SoilCurve {
  SoilId soil = 0;
  std::string name;
  std::vector<SpeedSlip> scatter;
  GaussianBasisModel fit;
  std::vector<CurvePoint> overlay;  // on a regular grid over the sampled range
  double max_deviation = 0.0;       // max |fitted - planted| on that grid
};

struct CurveOptions {
  double speed_min = 0.1;
  double speed_max = 0.5;
  int basis_count = 8;
  int overlay_points = 81;
};

// Slip-versus-speed scatter drawn from each soil's planted curve plus the
// basis-regression overlay.
std::vector<SoilCurve> export_slip_speed_curves(const SoilCatalog& catalog, std::size_t n_per_soil,
                                                std::uint64_t seed, const CurveOptions& opts = {});

struct UnseenSoilOptions {
  int refits = 5;
  std::size_t samples_per_traversal = 200;
  std::size_t test_samples = 4000;
  double speed_min = 0.3;  // test-terrain commanded speed range
  double speed_max = 0.5;
};

struct UnseenSoilResult {
  SoilId soil = 0;
  ClassLabel label;
  bool started_prior = false;
  double initial_mean = 0.0;
  SlipRiskBand initial_band;
  std::vector<double> mae;  // [0] before adaptation, then after each refit
  std::size_t test_n = 0;

  bool non_increasing() const;
};

// An unannotated soil on its own 20 m x 20 m terrain: the observed pseudo
// class starts at the prior, then `refits` traversals of
// `samples_per_traversal` samples each are streamed into a copy of `net`.
// Test MAE on held-out traversals is recorded after every refit.
UnseenSoilResult run_unseen_soil_experiment(const DatasetSpec& spec, const SoilCatalog& catalog,
                                            const AnnotationSet& annotation,
                                            const PseudoClassRegistry& pseudo, SoilId soil,
                                            const SlipNet& net, std::uint64_t seed,
                                            const UnseenSoilOptions& opts = {});

struct TerrainReport {
  std::int32_t terrain_id = 0;
  std::string name;
  std::size_t n = 0;
  std::map<Variant, double> mae;
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<TerrainReport> terrains;
  CalibrationReport calibration;  // full pipeline on the whole test set
  std::size_t pipeline_wins = 0;  // terrains where online pipeline MAE < prior-only MAE
  std::optional<UnseenSoilResult> unseen;
  std::vector<std::string> notices;
  double runtime_s = 0.0;
};

struct BenchmarkOptions {
  bool run_unseen = true;
  UnseenSoilOptions unseen;
};

// Trains nothing: `net` is the trained state. Test terrains are scored in
// parallel.
BenchmarkReport run_benchmark(const Dataset& data, const DatasetSpec& spec,
                              const SoilCatalog& catalog, const SlipNet& net, std::uint64_t seed,
                              const BenchmarkOptions& opts = {});

// Streams the training samples through a fresh SlipNet and flushes.
SlipNet train_slipnet(std::span<const SlipSample> train, const SlipNetConfig& cfg = {});

std::string format_report(const BenchmarkReport& report);

}  // namespace slipnet
