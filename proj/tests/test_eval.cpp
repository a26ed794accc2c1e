#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "slipnet/error.hpp"
#include "slipnet/eval.hpp"
#include "slipnet/io.hpp"

using namespace slipnet;

namespace {

SoilCatalog zero_noise_catalog() {
  auto soils = default_catalog().soils();
  for (auto& s : soils) s.noise_std = 0.0;
  return SoilCatalog(soils);
}

DatasetSpec mini_spec() {
  DatasetSpec spec;
  spec.n_trajectories = 2;
  spec.n_test_trajectories = 1;
  spec.n_train_terrains = 1;
  spec.total_samples = 400;
  spec.train_fraction = 0.5;
  return spec;
}

// Dataset generation is the slow part; share the default one.
const Dataset& default_dataset() {
  static const Dataset d = generate_dataset(DatasetSpec{}, default_catalog(), 42);
  return d;
}

}  // namespace

TEST(DeriveSeed, StableAndDistinct) {
  EXPECT_EQ(derive_seed(42, 1, 0), derive_seed(42, 1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t k = 0; k < 4; ++k)
      for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(s, k, i));
  EXPECT_EQ(seen.size(), 64u);
}

TEST(DatasetSpec, Targets) {
  DatasetSpec spec;
  EXPECT_EQ(spec.train_target(), 8064u);
  EXPECT_EQ(spec.test_target(), 2016u);
  spec.train_fraction = 1.5;
  EXPECT_THROW(spec.validate(), InvalidArgument);
}

TEST(GenerateDataset, DefaultCounts) {
  const auto& d = default_dataset();
  EXPECT_EQ(d.train.size(), 8064u);
  EXPECT_EQ(d.test.size(), 2016u);
  EXPECT_EQ(d.trajectories.size(), 24u);
  EXPECT_EQ(d.test_terrain_ids().size(), 5u);
}

TEST(GenerateDataset, SplitIsByTrajectory) {
  const auto& d = default_dataset();
  std::set<std::int32_t> train_ids, test_ids;
  for (const auto& s : d.train) train_ids.insert(s.trajectory_id);
  for (const auto& s : d.test) test_ids.insert(s.trajectory_id);
  for (auto id : train_ids) EXPECT_FALSE(test_ids.contains(id));
  std::map<std::int32_t, Split> split;
  for (const auto& t : d.trajectories) split[t.id] = t.split;
  for (auto id : train_ids) EXPECT_EQ(split.at(id), Split::kTrain);
  for (auto id : test_ids) EXPECT_EQ(split.at(id), Split::kTest);
  const auto tests = d.test_terrain_ids();
  for (const auto& s : d.test)
    EXPECT_NE(std::find(tests.begin(), tests.end(), s.terrain_id), tests.end());
}

TEST(GenerateDataset, TrainTerrainsUseAnnotatedSoils) {
  const auto& d = default_dataset();
  for (const auto& t : d.terrains) {
    if (t.split != Split::kTrain) continue;
    for (auto id : t.soils) EXPECT_TRUE(d.annotation.contains(id));
  }
  for (const auto& s : d.train) EXPECT_TRUE(s.class_observed.valid());
}

TEST(GenerateDataset, ByteIdenticalPerSeed) {
  const auto a = generate_dataset(DatasetSpec{}, default_catalog(), 42);
  const auto& b = default_dataset();
  EXPECT_EQ(io::samples_to_jsonl(a.train), io::samples_to_jsonl(b.train));
  EXPECT_EQ(io::samples_to_jsonl(a.test), io::samples_to_jsonl(b.test));
  EXPECT_EQ(io::samples_to_csv(a.test), io::samples_to_csv(b.test));
}

TEST(GenerateDataset, MiniSpecKeepsTrajectoriesWhole) {
  const auto d = generate_dataset(mini_spec(), default_catalog(), 7);
  ASSERT_EQ(d.trajectories.size(), 2u);
  std::set<std::int32_t> train_ids, test_ids;
  for (const auto& s : d.train) train_ids.insert(s.trajectory_id);
  for (const auto& s : d.test) test_ids.insert(s.trajectory_id);
  EXPECT_EQ(train_ids.size(), 1u);
  EXPECT_EQ(test_ids.size(), 1u);
  EXPECT_NE(*train_ids.begin(), *test_ids.begin());
  EXPECT_EQ(d.train.size(), 200u);
  EXPECT_EQ(d.test.size(), 200u);
}

TEST(GenerateDataset, BudgetExceeded) {
  auto spec = mini_spec();
  spec.total_samples = 10'000'000;
  EXPECT_THROW(generate_dataset(spec, default_catalog(), 7), BudgetExceeded);
}

TEST(EvaluateMae, OracleOnZeroNoiseDataIsZero) {
  const auto cat = zero_noise_catalog();
  auto spec = mini_spec();
  spec.rover.vo_noise_std = 0.0;
  const auto d = generate_dataset(spec, cat, 11);
  const SlipNet net;
  const auto ctx = make_eval_context(cat, net, d.train);
  const auto tid = d.test_terrain_ids();
  const auto r = evaluate_mae(Variant::kOracle, ctx, d.test, tid);
  std::size_t n = 0;
  for (const auto& t : r.terrains) {
    EXPECT_NEAR(t.mae, 0.0, 1e-12);
    n += t.n;
  }
  EXPECT_EQ(n, d.test.size());
}

TEST(EvaluateMae, PriorOnlyMatchesConstantTruth) {
  SlipSample s;
  s.v_ref = 0.4;
  s.slip = 0.3;
  s.v_x = 0.28;
  s.terrain_id = 7;
  s.soil_true = 0;
  const std::vector<SlipSample> test(50, s);
  const SlipNet net;
  const auto ctx = make_eval_context(default_catalog(), net, test);
  const std::vector<std::int32_t> ids{7, 8};
  const auto r = evaluate_mae(Variant::kPriorOnly, ctx, test, ids);
  ASSERT_EQ(r.terrains.size(), 1u);
  EXPECT_NEAR(r.terrains[0].mae, 0.0, 1e-12);
  ASSERT_EQ(r.notices.size(), 1u);
  EXPECT_NE(r.notices[0].find('8'), std::string::npos);
}

TEST(EvaluateMae, EqualsSlipRiskMae) {
  const auto& d = default_dataset();
  const auto net = train_slipnet(d.train);
  const auto ctx = make_eval_context(default_catalog(), net, d.train);
  const auto tid = d.test_terrain_ids();
  for (auto v : {Variant::kPriorOnly, Variant::kClassAgnostic, Variant::kPipeline}) {
    const auto r = evaluate_mae(v, ctx, d.test, tid);
    for (const auto& t : r.terrains) {
      std::vector<SlipSample> group;
      for (const auto& s : d.test)
        if (s.terrain_id == t.terrain_id) group.push_back(s);
      const auto pred = predict(v, ctx, group);
      std::vector<double> est, truth;
      for (std::size_t i = 0; i < group.size(); ++i) {
        est.push_back(pred[i].mean);
        truth.push_back(group[i].slip);
      }
      EXPECT_DOUBLE_EQ(t.mae, mae(est, truth));
      EXPECT_EQ(t.n, group.size());
    }
  }
}

TEST(Variant, Names) {
  for (auto v : kAllVariants) EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("magic"), InvalidArgument);
}

TEST(CalibrationReport, WideBandsCoverEverything) {
  std::vector<Prediction> p(100, {0.3, 1e9});
  std::vector<double> m(100);
  for (int i = 0; i < 100; ++i) m[static_cast<std::size_t>(i)] = 0.01 * i;
  const auto r = calibration_report(p, m);
  EXPECT_DOUBLE_EQ(r.within_1sigma, 1.0);
  EXPECT_DOUBLE_EQ(r.within_2sigma, 1.0);
  EXPECT_EQ(r.n, 100u);
}

TEST(CalibrationReport, NarrowBandsCoverNothing) {
  std::vector<Prediction> p(100, {0.3, kSigmaFloor});
  std::vector<double> m(100, 0.5);
  const auto r = calibration_report(p, m);
  EXPECT_NEAR(r.within_1sigma, 0.0, 1e-12);
  EXPECT_NEAR(r.within_2sigma, 0.0, 1e-12);
}

TEST(CalibrationReport, GaussianCoverage) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> e(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 0.6), sd(0.02, 0.1);
  std::vector<Prediction> p;
  std::vector<double> m;
  for (int i = 0; i < 2000; ++i) {
    const Prediction q{u(rng), sd(rng)};
    p.push_back(q);
    m.push_back(q.mean + q.sigma * e(rng));
  }
  const auto r = calibration_report(p, m);
  const double one = oracle::gaussian_cdf(1.0) - oracle::gaussian_cdf(-1.0);
  const double two = oracle::gaussian_cdf(2.0) - oracle::gaussian_cdf(-2.0);
  EXPECT_NEAR(r.within_1sigma, one, 0.05);
  EXPECT_NEAR(r.within_2sigma, two, 0.05);
}

TEST(CalibrationReport, Errors) {
  EXPECT_THROW(calibration_report({}, {}), InvalidArgument);
  const std::vector<Prediction> p(2, {0.3, 0.1});
  const std::vector<double> m(3, 0.3);
  EXPECT_THROW(calibration_report(p, m), InvalidArgument);
}

TEST(ExportCurves, EightCurvesNearPlanted) {
  const auto cat = default_catalog();
  const auto curves = export_slip_speed_curves(cat, 500, 42);
  ASSERT_EQ(curves.size(), 8u);
  for (const auto& c : curves) {
    EXPECT_EQ(c.scatter.size(), 500u);
    EXPECT_LE(c.max_deviation, 0.03) << c.name;
    EXPECT_EQ(c.overlay.size(), 81u);
    for (const auto& p : c.overlay) {
      EXPECT_DOUBLE_EQ(p.planted, cat.at(c.soil).expected_slip(p.speed));
      EXPECT_LE(std::abs(p.fitted - p.planted), c.max_deviation + 1e-15);
    }
  }
}

TEST(ExportCurves, ZeroNoiseScatterOnCurve) {
  const auto cat = zero_noise_catalog();
  for (const auto& c : export_slip_speed_curves(cat, 50, 3))
    for (const auto& p : c.scatter) EXPECT_DOUBLE_EQ(p.slip, cat.at(c.soil).expected_slip(p.speed));
  EXPECT_THROW(export_slip_speed_curves(cat, 0, 3), InvalidArgument);
}

TEST(UnseenSoil, StartsAtPrior) {
  const auto& d = default_dataset();
  const auto net = train_slipnet(d.train);
  const auto cat = default_catalog();
  SoilId unseen = -1;
  for (const auto& s : cat.soils())
    if (!d.annotation.contains(s.id)) {
      unseen = s.id;
      break;
    }
  ASSERT_GE(unseen, 0);
  UnseenSoilOptions opt;
  opt.refits = 2;
  opt.test_samples = 500;
  const auto r = run_unseen_soil_experiment(DatasetSpec{}, cat, d.annotation, d.pseudo, unseen, net, 42, opt);
  EXPECT_TRUE(r.started_prior);
  EXPECT_TRUE(r.label.is_pseudo());
  EXPECT_DOUBLE_EQ(r.initial_mean, 0.3);
  EXPECT_EQ(r.initial_band.index(), 2);
  EXPECT_EQ(r.mae.size(), 3u);
  for (double m : r.mae) EXPECT_GE(m, 0.0);
  EXPECT_THROW(run_unseen_soil_experiment(DatasetSpec{}, cat, d.annotation, d.pseudo,
                                          *d.annotation.ids().begin(), net, 42, opt),
               InvalidArgument);
}

TEST(Benchmark, ReportInvariants) {
  const auto& d = default_dataset();
  const auto net = train_slipnet(d.train);
  BenchmarkOptions opt;
  opt.run_unseen = false;
  const auto r = run_benchmark(d, DatasetSpec{}, default_catalog(), net, 42, opt);
  EXPECT_EQ(r.n_train, 8064u);
  EXPECT_EQ(r.n_test, 2016u);
  EXPECT_EQ(r.terrains.size(), 5u);
  for (const auto& t : r.terrains)
    for (const auto& [v, m] : t.mae) EXPECT_GE(m, 0.0);
  EXPECT_GE(r.calibration.within_1sigma, 0.0);
  EXPECT_LE(r.calibration.within_2sigma, 1.0);
  EXPECT_LE(r.calibration.within_1sigma, r.calibration.within_2sigma);
  EXPECT_FALSE(format_report(r).empty());
  const auto again = run_benchmark(d, DatasetSpec{}, default_catalog(), net, 42, opt);
  auto a = io::to_json(r), b = io::to_json(again);
  a.erase("timing");
  b.erase("timing");
  EXPECT_EQ(a, b);
}
