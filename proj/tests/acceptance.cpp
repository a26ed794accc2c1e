// Acceptance checks. One PASS/FAIL line per criterion with its runtime;
// exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "slipnet/eval.hpp"
#include "slipnet/io.hpp"

using namespace slipnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Criterion 1: tabulated slip-math examples to 1e-12.
Outcome slip_math() {
  int bad = 0;
  auto near = [&](double a, double b) {
    if (!(std::abs(a - b) <= 1e-12)) ++bad;
  };
  near(slip_ratio(0.5, 0.5), 0.0);
  near(slip_ratio(0.3, 0.5), 0.4);
  near(slip_ratio(0.0, 0.5), 1.0);
  if (classify_band(0.2).index() != 1) ++bad;
  if (classify_band(0.41).index() != 3) ++bad;
  if (classify_band(0.95).index() != 5) ++bad;
  const double edges[] = {0.2, 0.4, 0.6, 0.8};
  for (int k = 0; k < 4; ++k) {
    if (classify_band(edges[k]).index() != k + 1) ++bad;
    if (classify_band(std::nextafter(edges[k], 1.0)).index() != k + 2) ++bad;
  }
  const std::vector<double> g1{0.5, 0.7}, h1{0.4, 0.9}, ones{1, 1, 1}, zeros{0, 0, 0};
  near(mae(g1, g1), 0.0);
  near(mae(g1, h1), 0.15);
  near(mae(ones, zeros), 1.0);
  const std::vector<double> z{0.0}, o{1.0}, e{std::exp(1.0)};
  near(nll_loss(o, o, o).mean, 0.0);
  near(nll_loss(z, o, o).mean, 0.5);
  near(nll_loss(o, e, o).mean, 1.0);
  return {bad == 0, fmt::format("{} mismatches", bad)};
}

// Criterion 2: normal-equations fit vs 10,000-step gradient descent.
Outcome regression_oracle() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    std::mt19937_64 rng(1000 + k);
    std::uniform_real_distribution<double> u(0.1, 0.5), n(-0.05, 0.05);
    std::vector<SpeedSlip> data;
    for (int i = 0; i < 50; ++i) {
      const double v = u(rng);
      data.push_back({v, oracle::planted(v) + n(rng)});
    }
    BasisFitOptions opt;
    opt.basis_count = 4;
    const auto m = fit_basis_regression(data, opt);
    const auto gd = oracle::gradient_descent(data, m.centers(), m.scale(), opt.ridge, 10000);
    const double ne = oracle::objective(m.weights(), data, m.centers(), m.scale(), opt.ridge);
    const double go = oracle::objective(gd, data, m.centers(), m.scale(), opt.ridge);
    worst = std::max(worst, std::abs(ne - go));
  }
  return {worst <= 1e-6, fmt::format("max objective gap {:.3e}", worst)};
}

// Criterion 3: planted-curve recovery for 10 seeds.
Outcome planted_recovery() {
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BasisFitOptions opt;
    opt.basis_count = 8;
    opt.scale = 0.08;
    const auto m = fit_basis_regression(oracle::planted_samples(500, 0.02, seed), opt);
    double err = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double v = 0.1 + 0.001 * i;
      err = std::max(err, std::abs(m.evaluate(v) - oracle::planted(v)));
    }
    worst = std::max(worst, err);
    if (err <= 0.03) ++ok;
  }
  return {ok == 10, fmt::format("{}/10 seeds, worst max error {:.4f}", ok, worst)};
}

// Criterion 4: fitted sigma minimizes the NLL against a 1000-point grid.
Outcome nll_mle() {
  int ok = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    std::mt19937_64 rng(2000 + k);
    const double noise = std::uniform_real_distribution<double>(0.005, 0.2)(rng);
    const auto data = oracle::planted_samples(40 + 10 * k, noise, 3000 + k);
    const auto m = fit_class_model(ClassLabel::annotated(0), data, ClassModelConfig{});
    std::vector<double> means, targets;
    for (const auto& p : data) {
      means.push_back(m.mean_at(p.speed));
      targets.push_back(p.slip);
    }
    auto loss = [&](double s) {
      return nll_loss(means, std::vector<double>(data.size(), s), targets).mean;
    };
    const double best = loss(m.sigma);
    bool beats = !m.is_prior;
    for (int i = 1; i <= 1000; ++i) {
      const double s = 0.001 * i;
      if (loss(s) < best) beats = false;
    }
    if (beats) ++ok;
  }
  return {ok == 20, fmt::format("{}/20 residual sets", ok)};
}

// Criterion 5: dataset counts, split rule and determinism.
Outcome dataset_protocol() {
  const auto a = generate_dataset(DatasetSpec{}, default_catalog(), 42);
  const auto b = generate_dataset(DatasetSpec{}, default_catalog(), 42);
  std::set<std::int32_t> train, test;
  for (const auto& s : a.train) train.insert(s.trajectory_id);
  for (const auto& s : a.test) test.insert(s.trajectory_id);
  bool disjoint = true;
  for (auto id : train) disjoint = disjoint && !test.contains(id);
  const bool same = io::samples_to_jsonl(a.train) == io::samples_to_jsonl(b.train) &&
                    io::samples_to_jsonl(a.test) == io::samples_to_jsonl(b.test);
  const bool counts = a.train.size() == 8064 && a.test.size() == 2016;
  return {counts && disjoint && same,
          fmt::format("train {} test {}, trajectories disjoint {}, byte-identical {}", a.train.size(),
                      a.test.size(), disjoint, same)};
}

struct SeedRun {
  Dataset data;
  SlipNet net;
  BenchmarkReport report;
};

SeedRun run_seed(std::uint64_t seed) {
  SeedRun r;
  r.data = generate_dataset(DatasetSpec{}, default_catalog(), seed);
  r.net = train_slipnet(r.data.train);
  r.report = run_benchmark(r.data, DatasetSpec{}, default_catalog(), r.net, seed);
  return r;
}

// Criterion 6: full pipeline beats the class-agnostic prior on >= 4 of 5 terrains.
Outcome pipeline_beats_prior(const BenchmarkReport& rep) {
  std::string detail;
  for (const auto& t : rep.terrains)
    detail += fmt::format("{}{} {:.4f}<{:.4f}", detail.empty() ? "" : ", ", t.name,
                          t.mae.at(Variant::kPipelineOnline), t.mae.at(Variant::kPriorOnly));
  return {rep.pipeline_wins >= 4, fmt::format("{}/5 wins ({})", rep.pipeline_wins, detail)};
}

// Criterion 7: +-1 sigma coverage on the test set.
Outcome calibration(const BenchmarkReport& rep) {
  const auto& c = rep.calibration;
  return {c.n >= 2000 && c.within_1sigma >= 0.55 && c.within_1sigma <= 0.85,
          fmt::format("n {} within 1 sigma {:.3f}, within 2 sigma {:.3f}", c.n, c.within_1sigma,
                      c.within_2sigma)};
}

// Criterion 8: unseen soil starts at the prior and its MAE never rises over 5 refits.
Outcome unseen_soil(const std::vector<const BenchmarkReport*>& reps) {
  int ok = 0;
  std::string detail;
  for (const auto* rep : reps) {
    if (!rep->unseen) {
      detail += fmt::format(" seed {}: skipped;", rep->seed);
      continue;
    }
    const auto& u = *rep->unseen;
    const bool prior = u.started_prior && std::abs(u.initial_mean - 0.3) < 1e-12 &&
                       u.initial_band.index() == 2;
    const bool good = prior && u.mae.size() == 6 && u.non_increasing();
    if (good) ++ok;
    std::string seq;
    for (double m : u.mae) seq += fmt::format("{}{:.4f}", seq.empty() ? "" : " ", m);
    detail += fmt::format(" seed {} soil {} {}: prior {} mae [{}];", rep->seed, u.soil, u.label.str(),
                          prior, seq);
  }
  return {ok == static_cast<int>(reps.size()), fmt::format("{}/{} seeds;{}", ok, reps.size(), detail)};
}

// Criterion 9: cost-map contract over random pipeline states.
Outcome cost_map_contract() {
  int ok = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    std::mt19937_64 rng(derive_seed(9, 9, k));
    std::uniform_int_distribution<int> n_samples(0, 600), n_classes(1, 6), cls(0, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int classes = n_classes(rng);
    SlipNetConfig cfg;
    cfg.capacity = 50 + static_cast<std::size_t>(u(rng) * 400);
    cfg.refit_every = 20 + static_cast<std::size_t>(u(rng) * 200);
    SlipNet net(cfg);
    std::vector<SlipSample> stream;
    const int n = n_samples(rng);
    for (int i = 0; i < n; ++i) {
      SlipSample s;
      const int c = cls(rng) % classes;
      s.class_observed = c % 2 ? ClassLabel::pseudo(1 + c) : ClassLabel::annotated(c);
      s.v_ref = 0.05 + 0.6 * u(rng);
      s.slip = std::min(0.95, std::max(0.0, 0.1 * c + 0.4 * u(rng)));
      s.v_x = s.v_ref * (1 - s.slip);
      s.x = 4 * u(rng);
      s.y = 3 * u(rng);
      stream.push_back(s);
    }
    net.observe(stream);
    if (u(rng) < 0.5) net.flush();
    std::vector<ClassLabel> labels;
    for (int i = 0; i < 40 * 30; ++i) {
      const int c = cls(rng) % (classes + 1);
      labels.push_back(c == classes ? ClassLabel::none()
                                    : (c % 2 ? ClassLabel::pseudo(1 + c) : ClassLabel::annotated(c)));
    }
    const SegmentationMap seg(4.0, 3.0, 0.1, labels);
    std::vector<SlipSample> obs;
    if (u(rng) < 0.5) obs.assign(stream.begin(), stream.begin() + std::min<std::ptrdiff_t>(n, 50));
    const auto map = build_slip_cost_map(seg, net.registry(), 0.05 + 0.6 * u(rng), obs);
    bool good = cost_map_consistent(map) && map.cells.size() == labels.size();
    for (const auto& c : map.cells)
      good = good && c.mean >= 0.0 && c.mean <= 1.0 && c.std >= 0.0 &&
             c.band.index() == classify_band(c.mean).index();
    if (good) ++ok;
  }
  return {ok == 100, fmt::format("{}/100 states", ok)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, double limit_s, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt < limit_s;
    if (!pass) ++failures;
    std::printf("CRITERION %d %s %s: %s (runtime %.2f s, limit %.0f s)\n", id, pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), dt, limit_s);
    std::fflush(stdout);
  };

  report(1, "slip math exactness", 1, slip_math);
  report(2, "regression oracle equivalence", 10, regression_oracle);
  report(3, "planted-curve recovery", 10, planted_recovery);
  report(4, "NLL MLE analyticity", 5, nll_mle);
  report(5, "dataset protocol", 60, dataset_protocol);

  SeedRun s42;
  double t42 = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    s42 = run_seed(42);
    t42 = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  report(6, "pipeline beats prior baseline", 120 - t42, [&] { return pipeline_beats_prior(s42.report); });
  report(7, "calibration", 60 - t42, [&] { return calibration(s42.report); });
  report(8, "unseen-soil adaptation", 60, [&] {
    SeedRun s43 = run_seed(43), s44 = run_seed(44);
    return unseen_soil({&s42.report, &s43.report, &s44.report});
  });
  report(9, "cost map contract", 10, cost_map_contract);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
