#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "slipnet/error.hpp"

namespace slipnet::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Streams for artifacts that only the CLI produces; the library uses 1..8.
constexpr std::uint64_t kGenTerrainStream = 100;
constexpr std::uint64_t kGenSegmentStream = 101;
constexpr std::uint64_t kSimulatePlanStream = 102;
constexpr std::uint64_t kSimulatePathStream = 103;

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

fs::path run_root(const RunConfig& cfg) { return cfg.run_dir(); }

fs::path require(const RunConfig& cfg, const std::string& rel) {
  const fs::path p = run_root(cfg) / rel;
  if (!fs::exists(p)) throw MissingInput(p.string());
  return p;
}

std::string file_stem(const TerrainInstance& t) { return fmt::format("{:02d}-{}", t.id, t.name); }

const TerrainInstance& terrain_by_name(const Dataset& data, const std::string& name) {
  for (const auto& t : data.terrains)
    if (t.name == name) return t;
  std::string names;
  for (const auto& t : data.terrains) names += (names.empty() ? "" : ", ") + t.name;
  throw InvalidArgument(fmt::format("no terrain named '{}' (have: {})", name, names));
}

}  // namespace

RunDir::RunDir(const RunConfig& cfg, std::string command)
    : root_(cfg.run_dir()), command_(std::move(command)) {}

fs::path RunDir::path(const std::string& rel) const {
  const fs::path p(rel);
  if (p.is_absolute() || rel.find("..") != std::string::npos)
    throw InvalidArgument("output path escapes the run directory: " + rel);
  return root_ / p;
}

void RunDir::json(const std::string& rel, const Json& j) {
  io::write_json(path(rel), j);
  outputs_.push_back(rel);
}

void RunDir::text(const std::string& rel, const std::string& s) {
  io::write_text(path(rel), s);
  outputs_.push_back(rel);
}

void RunDir::bytes(const std::string& rel, const std::vector<unsigned char>& b) {
  io::write_bytes(path(rel), b);
  outputs_.push_back(rel);
}

void RunDir::samples(const std::string& rel, const std::vector<SlipSample>& s) {
  io::write_samples(path(rel), s);
  outputs_.push_back(rel);
}

void RunDir::finish(const RunConfig& cfg) {
  const fs::path mpath = root_ / "manifest.json";
  Json m = fs::exists(mpath) ? io::read_json(mpath) : Json::object();
  m["layout_version"] = kLayoutVersion;
  m["seed"] = cfg.seed;
  if (!m.contains("commands")) m["commands"] = Json::object();
  m["commands"][command_] = {{"timestamp", utc_timestamp()}, {"outputs", outputs_}};
  m["config"] = to_toml(cfg);
  io::write_json(mpath, m);
}

std::string sample_extension(const RunConfig& cfg) { return cfg.format == "csv" ? "csv" : "jsonl"; }

std::vector<SlipSample> load_samples(const RunConfig& cfg, const std::string& stem) {
  const std::string pref = sample_extension(cfg);
  const std::string other = pref == "csv" ? "jsonl" : "csv";
  const fs::path a = run_root(cfg) / "data" / (stem + "." + pref);
  const fs::path b = run_root(cfg) / "data" / (stem + "." + other);
  if (fs::exists(a)) return io::read_samples(a);
  if (fs::exists(b)) return io::read_samples(b);
  throw MissingInput(a.string() + " (run gen-data first)");
}

SoilCatalog load_catalog(const RunConfig& cfg) {
  const fs::path p = require(cfg, "data/meta.json");
  return io::catalog_from_json(io::read_json(p).at("catalog"));
}

Dataset load_dataset(const RunConfig& cfg) {
  const Json meta = io::read_json(require(cfg, "data/meta.json"));
  Dataset d;
  d.annotation = io::annotation_from_json(meta.at("annotation"));
  d.pseudo = io::pseudo_from_json(meta.at("pseudo"));
  for (const auto& t : io::read_json(require(cfg, "data/terrains.json")))
    d.terrains.push_back(io::terrain_instance_from_json(t));
  d.train = load_samples(cfg, "train");
  d.test = load_samples(cfg, "test");
  return d;
}

SlipNet load_slipnet(const RunConfig& cfg) {
  const fs::path p = run_root(cfg) / "models" / "slipnet.json";
  if (!fs::exists(p)) throw MissingInput(p.string() + " (run fit first)");
  return io::slipnet_from_json(io::read_json(p));
}

void cmd_gen_terrain(const RunConfig& cfg, std::ostream& log) {
  RunDir run(cfg, "gen-terrain");
  const auto& spec = cfg.dataset;
  const std::uint64_t tseed = derive_seed(cfg.seed, kGenTerrainStream);
  const TerrainGrid grid = generate_terrain(tseed, cfg.catalog, cfg.terrain_pattern, spec.width_m,
                                            spec.height_m, spec.resolution, spec.pattern);
  const AnnotationSet annotation = dataset_annotation(spec, cfg.catalog, cfg.seed);
  PseudoClassRegistry pseudo;
  std::mt19937_64 rng(derive_seed(cfg.seed, kGenSegmentStream));
  const SegmentationMap seg =
      segment(grid, cfg.catalog, annotation, spec.confusion, pseudo, spec.segment, rng);

  run.json("terrain/terrain.json",
           {{"pattern", to_string(cfg.terrain_pattern)}, {"seed", tseed}, {"grid", io::to_json(grid)}});
  run.bytes("terrain/terrain.pgm", io::terrain_pgm(grid, cfg.catalog));
  run.json("terrain/segmentation.json", io::to_json(seg));
  const auto img = io::segmentation_pgm(seg);
  run.bytes("terrain/segmentation.pgm", img.pgm);
  run.json("terrain/segmentation_legend.json", img.legend);
  run.json("terrain/catalog.json", io::to_json(cfg.catalog));
  run.json("terrain/annotation.json", io::to_json(annotation));
  run.json("terrain/pseudo.json", io::to_json(pseudo));
  run.finish(cfg);
  log << fmt::format("gen-terrain: {} {}x{} cells, {} pseudo classes -> {}\n",
                     to_string(cfg.terrain_pattern), grid.cols(), grid.rows(), pseudo.size(),
                     run.root().string());
}

void cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  RunDir run(cfg, "gen-data");
  const Dataset data = generate_dataset(cfg.dataset, cfg.catalog, cfg.seed);
  const std::string ext = sample_extension(cfg);
  run.samples("data/train." + ext, data.train);
  run.samples("data/test." + ext, data.test);

  Json trajs = Json::array();
  for (const auto& t : data.trajectories) trajs.push_back(io::to_json(t));
  run.json("data/trajectories.json", trajs);
  Json terrains = Json::array();
  for (const auto& t : data.terrains) terrains.push_back(io::to_json(t));
  run.json("data/terrains.json", terrains);
  run.json("data/meta.json", {{"seed", cfg.seed},
                              {"n_train", data.train.size()},
                              {"n_test", data.test.size()},
                              {"train_target", cfg.dataset.train_target()},
                              {"test_target", cfg.dataset.test_target()},
                              {"catalog", io::to_json(cfg.catalog)},
                              {"annotation", io::to_json(data.annotation)},
                              {"pseudo", io::to_json(data.pseudo)}});
  for (const auto& t : data.terrains) {
    run.bytes("data/terrain-maps/" + file_stem(t) + ".pgm", io::terrain_pgm(t.grid, cfg.catalog));
    const auto img = io::segmentation_pgm(t.segmentation);
    run.bytes("data/terrain-maps/" + file_stem(t) + "-segmentation.pgm", img.pgm);
    run.json("data/terrain-maps/" + file_stem(t) + "-legend.json", img.legend);
  }

  CurveOptions copt;
  copt.speed_min = cfg.dataset.train_speed_min;
  copt.speed_max = cfg.dataset.train_speed_max;
  copt.basis_count = cfg.slipnet.model.basis_count;
  for (const auto& c : export_slip_speed_curves(cfg.catalog, cfg.curve_samples, cfg.seed, copt)) {
    const std::string stem = fmt::format("curves/{:02d}-{}", c.soil, c.name);
    run.text(stem + ".csv", io::curve_scatter_csv(c));
    run.json(stem + ".json", io::to_json(c));
  }
  run.finish(cfg);
  log << fmt::format("gen-data: {} train / {} test samples from {} trajectories -> {}\n",
                     data.train.size(), data.test.size(), data.trajectories.size(),
                     run.root().string());
}

void cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const std::vector<SlipSample> train = load_samples(cfg, "train");
  RunDir run(cfg, "fit");
  const SlipNet net = train_slipnet(train, cfg.slipnet);
  run.json("models/slipnet.json", io::to_json(net));

  Json classes = Json::array();
  for (const auto& [label, m] : net.registry().models()) {
    Json curve = Json::array();
    for (int i = 0; i <= 8; ++i) {
      const double v = 0.1 + 0.05 * i;
      curve.push_back({{"speed", v}, {"mean", m.mean_at(v)}});
    }
    classes.push_back({{"label", label.str()},
                       {"is_prior", m.is_prior},
                       {"n_samples", m.n_samples},
                       {"sigma", m.sigma},
                       {"mean_by_speed", curve}});
  }
  run.json("models/summary.json", {{"n_train", train.size()},
                                   {"refits", net.refit_count()},
                                   {"buffer_size", net.buffer().size()},
                                   {"classes", classes}});
  run.finish(cfg);
  log << fmt::format("fit: {} samples, {} refits, {} classes -> {}\n", train.size(),
                     net.refit_count(), net.registry().models().size(), run.root().string());
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const Dataset data = load_dataset(cfg);
  const SoilCatalog catalog = load_catalog(cfg);
  const SlipNet net = load_slipnet(cfg);
  const TerrainInstance& t = terrain_by_name(data, cfg.simulate_terrain);
  RunDir run(cfg, "simulate");

  const auto& spec = cfg.dataset;
  PathOptions path = spec.path;
  path.forward_speed = cfg.simulate_speed;
  std::mt19937_64 rng(derive_seed(cfg.seed, kSimulatePlanStream));
  const double min_len =
      std::min(cfg.simulate_speed, spec.rover.max_surface_speed()) * (path.duration_s + 5.0);
  const auto wps = random_waypoints(rng, spec.width_m, spec.height_m, spec.waypoint_margin_m,
                                    spec.min_leg_m, min_len);
  const Trajectory traj = follow_path(wps, spec.rover, spec.gains, t.grid, catalog,
                                      derive_seed(cfg.seed, kSimulatePathStream), path);
  const auto samples = label_samples(traj, t.segmentation, 0, t.id);

  Json states = Json::array();
  for (const auto& s : traj.states) states.push_back({s.t, s.x, s.y, s.heading});
  Json wj = Json::array();
  for (const auto& w : wps) wj.push_back({w.x, w.y});
  run.json("simulate/trajectory.json", {{"terrain", t.name},
                                        {"commanded_speed", cfg.simulate_speed},
                                        {"waypoints", wj},
                                        {"termination", to_string(traj.termination)},
                                        {"clamped_commands", traj.clamped_commands},
                                        {"state_columns", {"t", "x", "y", "heading"}},
                                        {"states", states}});

  std::size_t inside = 0;
  std::string csv = "t,wheel,x,y,soil_true,class_observed,v_ref,measured,mean,std,band\n";
  std::string jsonl;
  for (const auto& s : samples) {
    const ClassSlipModel m = net.registry().lookup(s.class_observed);
    const double mean = m.mean_at(s.v_ref);
    const int band = classify_band(mean).index();
    if (std::abs(s.slip - mean) <= m.sigma) ++inside;
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.t, to_string(s.wheel), s.x, s.y,
                       s.soil_true, s.class_observed.str(), s.v_ref, s.slip, mean, m.sigma, band);
    jsonl += Json{{"t", s.t},           {"wheel", to_string(s.wheel)},
                  {"x", s.x},           {"y", s.y},
                  {"soil_true", s.soil_true}, {"class_observed", s.class_observed.str()},
                  {"v_ref", s.v_ref},   {"measured", s.slip},
                  {"mean", mean},       {"std", m.sigma},
                  {"band", band}}
                 .dump() +
             "\n";
  }
  if (cfg.format == "csv")
    run.text("simulate/series.csv", csv);
  else
    run.text("simulate/series.jsonl", jsonl);
  run.finish(cfg);
  const double cover = samples.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(samples.size());
  log << fmt::format("simulate: {} on {}, {} samples, {:.3f} within 1 sigma -> {}\n",
                     to_string(traj.termination), t.name, samples.size(), cover, run.root().string());
}

void cmd_costmap(const RunConfig& cfg, std::ostream& log) {
  const Dataset data = load_dataset(cfg);
  const SlipNet net = load_slipnet(cfg);
  std::vector<const TerrainInstance*> targets;
  if (cfg.costmap_terrain == "test") {
    for (const auto& t : data.terrains)
      if (t.split == Split::kTest) targets.push_back(&t);
  } else {
    targets.push_back(&terrain_by_name(data, cfg.costmap_terrain));
  }
  RunDir run(cfg, "costmap");
  for (const TerrainInstance* t : targets) {
    std::vector<SlipSample> obs;
    if (cfg.costmap_observed)
      for (const auto& s : data.test)
        if (s.terrain_id == t->id) obs.push_back(s);
    const SlipCostMap map = build_slip_cost_map(t->segmentation, net.registry(), cfg.costmap_speed, obs);
    if (!cost_map_consistent(map))
      throw std::runtime_error("cost map for " + t->name + " violates band/mean consistency");
    const std::string stem = "costmap/" + file_stem(*t);
    run.json(stem + ".json", io::to_json(map));
    run.bytes(stem + ".png", io::cost_map_png(map));
    run.bytes(stem + "-bands.pgm", io::band_pgm(map));
    std::array<std::size_t, SlipRiskBand::kCount> counts{};
    for (const auto& c : map.cells) ++counts[static_cast<std::size_t>(c.band.index() - 1)];
    log << fmt::format("costmap: {} at {} m/s, band cells {}\n", t->name, cfg.costmap_speed,
                       fmt::join(counts, "/"));
  }
  run.finish(cfg);
}

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const Dataset data = load_dataset(cfg);
  const SoilCatalog catalog = load_catalog(cfg);
  const SlipNet net = load_slipnet(cfg);
  RunDir run(cfg, "eval");
  const BenchmarkReport rep = run_benchmark(data, cfg.dataset, catalog, net, cfg.seed, cfg.bench);
  const std::string table = format_report(rep);
  run.json("report/benchmark.json", io::to_json(rep));
  run.text("report/benchmark.txt", table);
  run.finish(cfg);
  log << table;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const Getenv& getenv) {
  CLI::App app{"Slip-risk mapping pipeline: terrain, simulated traversals, per-class slip models, "
               "cost maps and evaluation."};
  app.name("slipnet");
  app.footer("\n" + describe_defaults());
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "TOML config file");
  app.add_option("--seed", seed, "master seed (run.seed)");
  app.add_option("--out", out_dir, "output root (run.out)");
  app.add_option("--format", format, "sample format (run.format)")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--set", sets, "override a key: section.key=value (repeatable)");

  using Cmd = void (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Cmd>> commands = {
      {"gen-terrain", "generate one terrain and its segmentation", cmd_gen_terrain},
      {"gen-data", "simulate the train/test dataset and slip-speed curves", cmd_gen_data},
      {"fit", "fit per-class slip models from the training samples", cmd_fit},
      {"simulate", "drive one traversal and write measured vs predicted slip", cmd_simulate},
      {"costmap", "write slip cost maps for test terrains", cmd_costmap},
      {"eval", "benchmark variants on the test terrains", cmd_eval},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_toml(cfg, io::read_text(config_path), config_path);
    apply_env(cfg, getenv);
    for (const auto& s : sets) apply_assignment(cfg, s);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!format.empty()) cfg.format = format;
    cfg.validate();
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) fn(cfg, out);
    return 0;
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace slipnet::cli
