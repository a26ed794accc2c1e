#include "slipnet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "slipnet/error.hpp"

namespace slipnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed streams.
constexpr std::uint64_t kTrainTerrainStream = 1;
constexpr std::uint64_t kSegmentStream = 2;
constexpr std::uint64_t kPlanStream = 3;
constexpr std::uint64_t kPathStream = 4;
constexpr std::uint64_t kTestTerrainStream = 5;
constexpr std::uint64_t kAnnotationStream = 6;
constexpr std::uint64_t kCurveStream = 7;
constexpr std::uint64_t kUnseenStream = 8;

constexpr TerrainPattern kPatternCycle[3] = {TerrainPattern::kStripes,
                                             TerrainPattern::kVoronoiPatches,
                                             TerrainPattern::kCheckerboard};

std::vector<SoilId> shuffled(std::vector<SoilId> ids, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

std::vector<SoilId> catalog_ids(const SoilCatalog& catalog) {
  std::vector<SoilId> ids;
  for (const auto& s : catalog.soils()) ids.push_back(s.id);
  return ids;
}

// Wheel samples of one scenario run, labelled and ready for the dataset.
struct Run {
  Trajectory traj;
  std::vector<SlipSample> samples;
};

Run run_scenario(const DatasetSpec& spec, const SoilCatalog& catalog, const TerrainInstance& t,
                 double speed, const std::vector<Waypoint>& waypoints, std::uint64_t path_seed,
                 std::int32_t trajectory_id) {
  PathOptions opts = spec.path;
  opts.forward_speed = speed;
  Run r;
  r.traj = follow_path(waypoints, spec.rover, spec.gains, t.grid, catalog, path_seed, opts);
  r.samples = label_samples(r.traj, t.segmentation, trajectory_id, t.id);
  return r;
}

double min_path_length(const DatasetSpec& spec, double speed) {
  // Longer than the rover can drive in the scenario time so runs end on duration.
  return std::min(speed, spec.rover.max_surface_speed()) * (spec.path.duration_s + 5.0);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

void DatasetSpec::validate() const {
  if (n_trajectories < 2) throw InvalidArgument("dataset: n_trajectories must be >= 2");
  if (n_test_trajectories < 1 || n_test_trajectories >= n_trajectories)
    throw InvalidArgument("dataset: n_test_trajectories must lie in [1, n_trajectories)");
  if (n_train_terrains < 1) throw InvalidArgument("dataset: n_train_terrains must be >= 1");
  if (!(width_m > 0.0 && height_m > 0.0 && resolution > 0.0))
    throw InvalidArgument("dataset: terrain dimensions must be > 0");
  if (total_samples < 2) throw InvalidArgument("dataset: total_samples must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("dataset: train_fraction must lie in (0, 1)");
  if (train_target() == 0 || test_target() == 0)
    throw InvalidArgument("dataset: both split targets must be >= 1");
  if (!(annotation_fraction > 0.0 && annotation_fraction <= 1.0))
    throw InvalidArgument("dataset: annotation_fraction must lie in (0, 1]");
  if (!(train_speed_min > 0.0 && train_speed_min <= train_speed_max))
    throw InvalidArgument("dataset: need 0 < train_speed_min <= train_speed_max");
  if (!(test_speed_min > 0.0 && test_speed_min <= test_speed_max))
    throw InvalidArgument("dataset: need 0 < test_speed_min <= test_speed_max");
  if (!(waypoint_margin_m >= 0.0 && 2.0 * waypoint_margin_m < std::min(width_m, height_m)))
    throw InvalidArgument("dataset: waypoint margin leaves no room for paths");
  if (!(min_leg_m > 0.0)) throw InvalidArgument("dataset: min_leg_m must be > 0");
  rover.validate();
  confusion.validate();
  if (!(segment.tau > 0.0)) throw InvalidArgument("dataset: tau must be > 0");
  if (!(path.duration_s > 0.0)) throw InvalidArgument("dataset: duration must be > 0");
}

std::size_t DatasetSpec::train_target() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(total_samples) * train_fraction));
}

std::string to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

const TerrainInstance& Dataset::terrain(std::int32_t id) const {
  for (const auto& t : terrains)
    if (t.id == id) return t;
  throw InvalidArgument("unknown terrain id " + std::to_string(id));
}

std::vector<std::int32_t> Dataset::test_terrain_ids() const {
  std::vector<std::int32_t> ids;
  for (const auto& t : terrains)
    if (t.split == Split::kTest) ids.push_back(t.id);
  return ids;
}

SoilId find_desert_sand(const SoilCatalog& catalog) {
  for (const auto& s : catalog.soils())
    if (s.name == "desert_sand") return s.id;
  const SoilSpec* best = &catalog.soils().front();
  for (const auto& s : catalog.soils())
    if (s.expected_slip(0.4) > best->expected_slip(0.4)) best = &s;
  return best->id;
}

AnnotationSet dataset_annotation(const DatasetSpec& spec, const SoilCatalog& catalog,
                                 std::uint64_t seed) {
  return AnnotationSet::sample(catalog, spec.annotation_fraction,
                               derive_seed(seed, kAnnotationStream),
                               {find_desert_sand(catalog)});
}

std::vector<TerrainInstance> dataset_terrains(const DatasetSpec& spec, const SoilCatalog& catalog,
                                              const AnnotationSet& annotation,
                                              PseudoClassRegistry& pseudo, std::uint64_t seed) {
  std::vector<SoilId> annotated;
  std::vector<SoilId> unannotated;
  for (SoilId id : catalog_ids(catalog))
    (annotation.contains(id) ? annotated : unannotated).push_back(id);

  std::vector<TerrainInstance> out;
  auto add = [&](Split split, std::string name, TerrainPattern pattern, std::uint64_t tseed,
                 std::vector<SoilId> soils) {
    TerrainInstance t;
    t.id = static_cast<std::int32_t>(out.size());
    t.name = std::move(name);
    t.split = split;
    t.pattern = pattern;
    t.seed = tseed;
    t.soils = std::move(soils);
    t.grid = generate_terrain(tseed, catalog.subset(t.soils), pattern, spec.width_m,
                              spec.height_m, spec.resolution, spec.pattern);
    out.push_back(std::move(t));
  };

  for (std::size_t i = 0; i < spec.n_train_terrains; ++i) {
    const std::uint64_t s = derive_seed(seed, kTrainTerrainStream, i);
    const TerrainPattern p = kPatternCycle[i % 3];
    add(Split::kTrain, fmt::format("train-{}-{}", i + 1, to_string(p)), p, s, shuffled(annotated, s));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const std::uint64_t s = derive_seed(seed, kTestTerrainStream, i);
    const TerrainPattern p = kPatternCycle[i];
    add(Split::kTest, fmt::format("test-{}-{}", i + 1, to_string(p)), p, s,
        shuffled(catalog_ids(catalog), s));
  }
  {
    const std::uint64_t s = derive_seed(seed, kTestTerrainStream, 3);
    std::vector<SoilId> mix = shuffled(unannotated, s);
    if (mix.empty()) {
      // Everything annotated: fall back to the last two catalog soils.
      const auto all = catalog_ids(catalog);
      mix.assign(all.end() - static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, all.size())),
                 all.end());
    }
    if (mix.size() > 2) mix.resize(2);
    add(Split::kTest, "test-4-unseen-mix", TerrainPattern::kVoronoiPatches, s, mix);
  }
  add(Split::kTest, "test-5-desert-sand", TerrainPattern::kStripes,
      derive_seed(seed, kTestTerrainStream, 4), {find_desert_sand(catalog)});

  std::mt19937_64 seg_rng(derive_seed(seed, kSegmentStream));
  for (auto& t : out)
    t.segmentation = segment(t.grid, catalog, annotation, spec.confusion, pseudo, spec.segment,
                             seg_rng);
  return out;
}

std::vector<Waypoint> random_waypoints(std::mt19937_64& rng, double width_m, double height_m,
                                       double margin_m, double min_leg_m, double min_length_m) {
  std::uniform_real_distribution<double> ux(margin_m, width_m - margin_m);
  std::uniform_real_distribution<double> uy(margin_m, height_m - margin_m);
  std::vector<Waypoint> wps{{ux(rng), uy(rng)}};
  double length = 0.0;
  constexpr int kMaxWaypoints = 64;
  constexpr int kMaxTries = 256;
  while ((length < min_length_m || wps.size() < 2) &&
         wps.size() < static_cast<std::size_t>(kMaxWaypoints)) {
    Waypoint next{ux(rng), uy(rng)};
    double d = std::hypot(next.x - wps.back().x, next.y - wps.back().y);
    for (int k = 0; k < kMaxTries && d < min_leg_m; ++k) {
      next = {ux(rng), uy(rng)};
      d = std::hypot(next.x - wps.back().x, next.y - wps.back().y);
    }
    wps.push_back(next);
    length += d;
  }
  return wps;
}

std::vector<SlipSample> label_samples(const Trajectory& traj, const SegmentationMap& seg,
                                      std::int32_t trajectory_id, std::int32_t terrain_id) {
  std::vector<SlipSample> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    if (s.wheel == Wheel::kBodyMean) continue;
    SlipSample l = s;
    l.class_observed = seg.at(s.x, s.y);
    l.trajectory_id = trajectory_id;
    l.terrain_id = terrain_id;
    out.push_back(l);
  }
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec, const SoilCatalog& catalog, std::uint64_t seed) {
  spec.validate();
  Dataset data;
  data.annotation = dataset_annotation(spec, catalog, seed);
  data.terrains = dataset_terrains(spec, catalog, data.annotation, data.pseudo, seed);

  std::vector<const TerrainInstance*> train_t;
  std::vector<const TerrainInstance*> test_t;
  for (const auto& t : data.terrains) (t.split == Split::kTrain ? train_t : test_t).push_back(&t);

  const std::size_t n_test = spec.n_test_trajectories;
  const std::size_t n_train = spec.n_trajectories - n_test;

  // Plan every trajectory, simulate them concurrently, then apply quotas in order.
  struct Plan {
    TrajectoryInfo info;
    const TerrainInstance* terrain;
    std::uint64_t path_seed;
  };
  std::vector<Plan> plans;
  for (std::size_t j = 0; j < spec.n_trajectories; ++j) {
    const bool is_test = j >= n_train;
    const std::size_t k = is_test ? j - n_train : j;
    Plan p;
    p.info.id = static_cast<std::int32_t>(j);
    p.info.split = is_test ? Split::kTest : Split::kTrain;
    p.terrain = is_test ? test_t[k % test_t.size()] : train_t[k % train_t.size()];
    p.info.terrain_id = p.terrain->id;
    std::mt19937_64 rng(derive_seed(seed, kPlanStream, j));
    const double lo = is_test ? spec.test_speed_min : spec.train_speed_min;
    const double hi = is_test ? spec.test_speed_max : spec.train_speed_max;
    p.info.commanded_speed = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    p.info.waypoints = random_waypoints(rng, spec.width_m, spec.height_m, spec.waypoint_margin_m,
                                        spec.min_leg_m, min_path_length(spec, p.info.commanded_speed));
    p.path_seed = derive_seed(seed, kPathStream, j);
    plans.push_back(std::move(p));
  }

  std::vector<std::future<Run>> futures;
  futures.reserve(plans.size());
  for (const auto& p : plans)
    futures.push_back(std::async(std::launch::async, [&spec, &catalog, &p] {
      return run_scenario(spec, catalog, *p.terrain, p.info.commanded_speed, p.info.waypoints,
                          p.path_seed, p.info.id);
    }));

  std::size_t remaining[2] = {spec.train_target(), spec.test_target()};
  std::size_t left[2] = {n_train, n_test};
  for (std::size_t j = 0; j < plans.size(); ++j) {
    Run run = futures[j].get();
    auto& info = plans[j].info;
    const int side = info.split == Split::kTrain ? 0 : 1;
    const std::size_t quota = (remaining[side] + left[side] - 1) / left[side];
    info.termination = run.traj.termination;
    info.n_logged = run.samples.size();
    info.n_kept = std::min(quota, run.samples.size());
    auto& dst = side == 0 ? data.train : data.test;
    dst.insert(dst.end(), run.samples.begin(),
               run.samples.begin() + static_cast<std::ptrdiff_t>(info.n_kept));
    remaining[side] -= info.n_kept;
    --left[side];
    data.trajectories.push_back(info);
  }
  if (remaining[0] > 0 || remaining[1] > 0)
    throw BudgetExceeded(fmt::format(
        "trajectory budget exhausted: {} train and {} test samples short of target", remaining[0],
        remaining[1]));
  return data;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kOracle: return "oracle";
    case Variant::kPriorOnly: return "prior_only";
    case Variant::kClassAgnostic: return "class_agnostic";
    case Variant::kPipeline: return "pipeline";
    case Variant::kPipelineOnline: return "pipeline_online";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : kAllVariants)
    if (to_string(v) == s) return v;
  throw InvalidArgument("unknown variant '" + s + "'");
}

EvalContext make_eval_context(const SoilCatalog& catalog, const SlipNet& net,
                              std::span<const SlipSample> train) {
  EvalContext ctx;
  ctx.catalog = &catalog;
  ctx.net = &net;
  std::vector<SpeedSlip> pts;
  pts.reserve(train.size());
  for (const auto& s : train) pts.push_back({s.v_ref, s.slip});
  const auto& mc = net.config().model;
  if (pts.size() >= static_cast<std::size_t>(mc.basis_count)) {
    try {
      BasisFitOptions opts;
      opts.basis_count = mc.basis_count;
      opts.scale = mc.scale;
      ctx.agnostic = fit_basis_regression(pts, opts);
      ctx.agnostic_sigma = std::max(mc.sigma_floor, ctx.agnostic->diagnostics().residual_std);
    } catch (const DegenerateDesign&) {
      ctx.agnostic.reset();
    }
  }
  return ctx;
}

std::vector<Prediction> predict(Variant variant, const EvalContext& ctx,
                                std::span<const SlipSample> samples) {
  if (ctx.catalog == nullptr || ctx.net == nullptr)
    throw InvalidArgument("predict: evaluation context is incomplete");
  const auto& mc = ctx.net->config().model;
  std::vector<Prediction> out;
  out.reserve(samples.size());
  switch (variant) {
    case Variant::kOracle:
      for (const auto& s : samples) {
        const auto& soil = ctx.catalog->at(s.soil_true);
        out.push_back({soil.expected_slip(s.v_ref), std::max(mc.sigma_floor, soil.noise_std)});
      }
      break;
    case Variant::kPriorOnly:
      for (std::size_t i = 0; i < samples.size(); ++i)
        out.push_back({std::clamp(mc.prior_mean, 0.0, 1.0), mc.prior_sigma});
      break;
    case Variant::kClassAgnostic:
      if (!ctx.agnostic) throw InsufficientData("class-agnostic model was not fitted");
      for (const auto& s : samples) {
        const double v = std::clamp(s.v_ref, ctx.agnostic->range_min(), ctx.agnostic->range_max());
        out.push_back({predict_slip(*ctx.agnostic, v).clamped, ctx.agnostic_sigma});
      }
      break;
    case Variant::kPipeline: {
      std::map<ClassLabel, ClassSlipModel> cache;
      for (const auto& s : samples) {
        auto it = cache.find(s.class_observed);
        if (it == cache.end())
          it = cache.emplace(s.class_observed, ctx.net->registry().lookup(s.class_observed)).first;
        out.push_back({it->second.mean_at(s.v_ref), it->second.sigma});
      }
      break;
    }
    case Variant::kPipelineOnline: {
      SlipNet net = *ctx.net;
      for (const auto& s : samples) {
        const ClassSlipModel m = net.registry().lookup(s.class_observed);
        out.push_back({m.mean_at(s.v_ref), m.sigma});
        net.observe(std::span<const SlipSample>(&s, 1));
      }
      break;
    }
  }
  return out;
}

namespace {

std::map<std::int32_t, std::vector<SlipSample>> group_by_terrain(std::span<const SlipSample> test) {
  std::map<std::int32_t, std::vector<SlipSample>> groups;
  for (const auto& s : test) groups[s.terrain_id].push_back(s);
  return groups;
}

double mae_of(std::span<const Prediction> preds, std::span<const SlipSample> samples) {
  std::vector<double> est(preds.size());
  std::vector<double> truth(samples.size());
  for (std::size_t i = 0; i < preds.size(); ++i) est[i] = preds[i].mean;
  for (std::size_t i = 0; i < samples.size(); ++i) truth[i] = samples[i].slip;
  return mae(est, truth);
}

}  // namespace

MaeResult evaluate_mae(Variant variant, const EvalContext& ctx, std::span<const SlipSample> test,
                       std::span<const std::int32_t> terrain_ids) {
  const auto groups = group_by_terrain(test);
  MaeResult r;
  for (std::int32_t id : terrain_ids) {
    auto it = groups.find(id);
    if (it == groups.end() || it->second.empty()) {
      r.notices.push_back(fmt::format("terrain {}: no test samples, skipped", id));
      continue;
    }
    const auto preds = predict(variant, ctx, it->second);
    r.terrains.push_back({id, it->second.size(), mae_of(preds, it->second)});
  }
  return r;
}

CalibrationReport calibration_report(std::span<const Prediction> predictions,
                                     std::span<const double> measurements) {
  if (predictions.empty()) throw InvalidArgument("calibration_report: no predictions");
  if (predictions.size() != measurements.size())
    throw InvalidArgument("calibration_report: length mismatch");
  std::size_t in1 = 0;
  std::size_t in2 = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = std::abs(predictions[i].mean - measurements[i]);
    const double s = predictions[i].sigma;
    if (d <= s) ++in1;
    if (d <= 2.0 * s) ++in2;
  }
  CalibrationReport r;
  r.n = predictions.size();
  r.within_1sigma = static_cast<double>(in1) / static_cast<double>(r.n);
  r.within_2sigma = static_cast<double>(in2) / static_cast<double>(r.n);
  return r;
}

std::vector<SoilCurve> export_slip_speed_curves(const SoilCatalog& catalog, std::size_t n_per_soil,
                                                std::uint64_t seed, const CurveOptions& opts) {
  if (n_per_soil < 1) throw InvalidArgument("export_slip_speed_curves: n must be >= 1");
  if (!(opts.speed_min > 0.0 && opts.speed_min < opts.speed_max))
    throw InvalidArgument("export_slip_speed_curves: need 0 < speed_min < speed_max");
  if (opts.overlay_points < 2) throw InvalidArgument("export_slip_speed_curves: overlay_points < 2");
  std::vector<SoilCurve> out;
  std::size_t idx = 0;
  for (const auto& soil : catalog.soils()) {
    std::mt19937_64 rng(derive_seed(seed, kCurveStream, idx++));
    std::uniform_real_distribution<double> speed(opts.speed_min, opts.speed_max);
    SoilCurve c;
    c.soil = soil.id;
    c.name = soil.name;
    c.scatter.reserve(n_per_soil);
    for (std::size_t i = 0; i < n_per_soil; ++i) {
      const double v = speed(rng);
      c.scatter.push_back({v, soil.sample_slip(v, rng)});
    }
    BasisFitOptions fo;
    fo.basis_count = std::min<int>(opts.basis_count, static_cast<int>(n_per_soil));
    c.fit = fit_basis_regression(c.scatter, fo);
    const double lo = c.fit.range_min();
    const double hi = c.fit.range_max();
    for (int k = 0; k < opts.overlay_points; ++k) {
      const double v = lo + (hi - lo) * k / (opts.overlay_points - 1);
      CurvePoint p{v, soil.expected_slip(v), predict_slip(c.fit, v).clamped};
      c.max_deviation = std::max(c.max_deviation, std::abs(p.fitted - p.planted));
      c.overlay.push_back(p);
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool UnseenSoilResult::non_increasing() const {
  for (std::size_t i = 1; i < mae.size(); ++i)
    if (mae[i] > mae[i - 1]) return false;
  return true;
}

namespace {

double registry_mae(const ModelRegistry& reg, std::span<const SlipSample> test) {
  std::map<ClassLabel, ClassSlipModel> cache;
  std::vector<double> est;
  std::vector<double> truth;
  est.reserve(test.size());
  truth.reserve(test.size());
  for (const auto& s : test) {
    auto it = cache.find(s.class_observed);
    if (it == cache.end()) it = cache.emplace(s.class_observed, reg.lookup(s.class_observed)).first;
    est.push_back(it->second.mean_at(s.v_ref));
    truth.push_back(s.slip);
  }
  return mae(est, truth);
}

}  // namespace

UnseenSoilResult run_unseen_soil_experiment(const DatasetSpec& spec, const SoilCatalog& catalog,
                                            const AnnotationSet& annotation,
                                            const PseudoClassRegistry& pseudo, SoilId soil,
                                            const SlipNet& net, std::uint64_t seed,
                                            const UnseenSoilOptions& opts) {
  if (annotation.contains(soil))
    throw InvalidArgument("unseen-soil experiment needs a soil outside the annotation set");
  if (opts.refits < 1 || opts.samples_per_traversal < 1 || opts.test_samples < 1)
    throw InvalidArgument("unseen-soil experiment: counts must be >= 1");
  spec.validate();

  TerrainInstance t;
  t.id = 0;
  t.name = "unseen-" + catalog.at(soil).name;
  t.pattern = TerrainPattern::kStripes;
  t.seed = derive_seed(seed, kUnseenStream, 0);
  t.soils = {soil};
  t.grid = generate_terrain(t.seed, catalog.subset(t.soils), t.pattern, spec.width_m,
                            spec.height_m, spec.resolution, spec.pattern);
  PseudoClassRegistry reg = pseudo;
  std::mt19937_64 seg_rng(derive_seed(seed, kUnseenStream, 1));
  t.segmentation = segment(t.grid, catalog, annotation, spec.confusion, reg, spec.segment, seg_rng);

  UnseenSoilResult r;
  r.soil = soil;
  {
    std::map<ClassLabel, std::size_t> counts;
    for (ClassLabel l : t.segmentation.cells()) ++counts[l];
    r.label = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                return a.second < b.second;
              })->first;
  }

  // Collects at least n samples from fresh traversals on the soil.
  std::int32_t traj_id = 0;
  auto collect = [&](std::uint64_t stream, std::size_t n) {
    std::vector<SlipSample> got;
    for (std::uint64_t k = 0; got.size() < n; ++k) {
      if (k > 64) throw BudgetExceeded("unseen-soil experiment: traversals yield too few samples");
      std::mt19937_64 rng(derive_seed(seed, stream, k));
      const double v = opts.speed_min == opts.speed_max
                           ? opts.speed_min
                           : std::uniform_real_distribution<double>(opts.speed_min,
                                                                    opts.speed_max)(rng);
      const auto wps = random_waypoints(rng, spec.width_m, spec.height_m, spec.waypoint_margin_m,
                                        spec.min_leg_m, min_path_length(spec, v));
      Run run = run_scenario(spec, catalog, t, v, wps, derive_seed(seed, stream + 1, k), traj_id++);
      got.insert(got.end(), run.samples.begin(), run.samples.end());
    }
    got.resize(n);
    return got;
  };

  const std::vector<SlipSample> test = collect(kUnseenStream + 10, opts.test_samples);
  r.test_n = test.size();

  SlipNet adapt = net;
  const SlipCostMap before = build_slip_cost_map(t.segmentation, adapt.registry(),
                                                 0.5 * (opts.speed_min + opts.speed_max));
  const ClassSlipModel m0 = adapt.registry().lookup(r.label);
  r.started_prior = m0.is_prior;
  for (std::size_t i = 0; i < before.cells.size(); ++i) {
    if (t.segmentation.cells()[i] == r.label) {
      r.initial_mean = before.cells[i].mean;
      r.initial_band = before.cells[i].band;
      break;
    }
  }
  r.mae.push_back(registry_mae(adapt.registry(), test));
  for (int k = 0; k < opts.refits; ++k) {
    const auto batch = collect(kUnseenStream + 20 + 2 * static_cast<std::uint64_t>(k),
                               opts.samples_per_traversal);
    adapt.observe(batch);
    adapt.flush();
    r.mae.push_back(registry_mae(adapt.registry(), test));
  }
  return r;
}

SlipNet train_slipnet(std::span<const SlipSample> train, const SlipNetConfig& cfg) {
  SlipNet net(cfg);
  net.observe(train);
  net.flush();
  return net;
}

BenchmarkReport run_benchmark(const Dataset& data, const DatasetSpec& spec,
                              const SoilCatalog& catalog, const SlipNet& net, std::uint64_t seed,
                              const BenchmarkOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkReport rep;
  rep.seed = seed;
  rep.n_train = data.train.size();
  rep.n_test = data.test.size();

  const EvalContext ctx = make_eval_context(catalog, net, data.train);
  const auto groups = group_by_terrain(data.test);

  struct Scored {
    TerrainReport report;
    std::vector<Prediction> online;
    std::vector<double> measured;
  };
  std::vector<std::future<Scored>> jobs;
  std::vector<std::int32_t> ids = data.test_terrain_ids();
  for (std::int32_t id : ids) {
    auto it = groups.find(id);
    if (it == groups.end() || it->second.empty()) {
      rep.notices.push_back(fmt::format("terrain {}: no test samples, skipped", id));
      continue;
    }
    const std::vector<SlipSample>* group = &it->second;
    const std::string name = data.terrain(id).name;
    jobs.push_back(std::async(std::launch::async, [&ctx, group, id, name] {
      Scored s;
      s.report.terrain_id = id;
      s.report.name = name;
      s.report.n = group->size();
      for (Variant v : kAllVariants) {
        if (v == Variant::kClassAgnostic && !ctx.agnostic) continue;
        auto preds = predict(v, ctx, *group);
        s.report.mae[v] = mae_of(preds, *group);
        if (v == Variant::kPipelineOnline) s.online = std::move(preds);
      }
      for (const auto& smp : *group) s.measured.push_back(smp.slip);
      return s;
    }));
  }

  std::vector<Prediction> all_preds;
  std::vector<double> all_meas;
  for (auto& j : jobs) {
    Scored s = j.get();
    if (s.report.mae.at(Variant::kPipelineOnline) < s.report.mae.at(Variant::kPriorOnly))
      ++rep.pipeline_wins;
    all_preds.insert(all_preds.end(), s.online.begin(), s.online.end());
    all_meas.insert(all_meas.end(), s.measured.begin(), s.measured.end());
    rep.terrains.push_back(std::move(s.report));
  }
  if (!all_preds.empty()) rep.calibration = calibration_report(all_preds, all_meas);

  if (opts.run_unseen) {
    std::optional<SoilId> unseen;
    for (const auto& s : catalog.soils())
      if (!data.annotation.contains(s.id)) {
        unseen = s.id;
        break;
      }
    if (unseen)
      rep.unseen = run_unseen_soil_experiment(spec, catalog, data.annotation, data.pseudo, *unseen,
                                              net, seed, opts.unseen);
    else
      rep.notices.push_back("every soil is annotated; unseen-soil experiment skipped");
  }

  rep.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string format_report(const BenchmarkReport& r) {
  std::ostringstream os;
  os << fmt::format("seed {}  train {}  test {}\n\n", r.seed, r.n_train, r.n_test);
  os << fmt::format("{:<28}{:>6}", "terrain", "n");
  for (Variant v : kAllVariants) os << fmt::format("{:>17}", to_string(v));
  os << "\n";
  for (const auto& t : r.terrains) {
    os << fmt::format("{:<28}{:>6}", t.name, t.n);
    for (Variant v : kAllVariants) {
      auto it = t.mae.find(v);
      os << (it == t.mae.end() ? fmt::format("{:>17}", "-") : fmt::format("{:>17.4f}", it->second));
    }
    os << "\n";
  }
  os << fmt::format("\npipeline_online beats prior_only on {} of {} terrains\n", r.pipeline_wins,
                    r.terrains.size());
  os << fmt::format("calibration (n={}): within 1 sigma {:.3f}, within 2 sigma {:.3f}\n",
                    r.calibration.n, r.calibration.within_1sigma, r.calibration.within_2sigma);
  if (r.unseen) {
    const auto& u = *r.unseen;
    os << fmt::format("\nunseen soil {} as {}: start {} mean {:.3f} band {}\n", u.soil, u.label.str(),
                      u.started_prior ? "prior" : "fitted", u.initial_mean, u.initial_band.index());
    os << "  test MAE per refit:";
    for (double m : u.mae) os << fmt::format(" {:.4f}", m);
    os << fmt::format("  ({})\n", u.non_increasing() ? "non-increasing" : "not monotone");
  }
  for (const auto& n : r.notices) os << "note: " << n << "\n";
  os << fmt::format("runtime {:.2f} s\n", r.runtime_s);
  return os.str();
}

}  // namespace slipnet
