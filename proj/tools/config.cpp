#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>
#include <toml.hpp>

#include "slipnet/error.hpp"

namespace slipnet::cli {

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string show(double v) { return fmt::format("{}", v); }

[[noreturn]] void bad_value(const std::string& what, const std::string& text) {
  throw InvalidArgument(fmt::format("{}: cannot parse '{}'", what, text));
}

double parse_double(const std::string& what, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(what, text);
  return v;
}

template <typename I>
I parse_integer(const std::string& what, const std::string& text) {
  I v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(what, text);
  return v;
}

bool parse_bool(const std::string& what, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad_value(what, text);
}

template <typename T>
using Ref = std::function<T&(RunConfig&)>;

ConfigField num(std::string sec, std::string key, std::string help, Ref<double> ref) {
  const std::string what = sec + "." + key;
  return {sec, key, std::move(help),
          [ref, what](RunConfig& c, const std::string& t) { ref(c) = parse_double(what, t); },
          [ref](const RunConfig& c) { return show(ref(const_cast<RunConfig&>(c))); }};
}

template <typename I>
ConfigField integer(std::string sec, std::string key, std::string help, Ref<I> ref) {
  const std::string what = sec + "." + key;
  return {sec, key, std::move(help),
          [ref, what](RunConfig& c, const std::string& t) { ref(c) = parse_integer<I>(what, t); },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

ConfigField boolean(std::string sec, std::string key, std::string help, Ref<bool> ref) {
  const std::string what = sec + "." + key;
  return {sec, key, std::move(help),
          [ref, what](RunConfig& c, const std::string& t) { ref(c) = parse_bool(what, t); },
          [ref](const RunConfig& c) {
            return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

ConfigField text(std::string sec, std::string key, std::string help, Ref<std::string> ref) {
  return {sec, key, std::move(help), [ref](RunConfig& c, const std::string& t) { ref(c) = t; },
          [ref](const RunConfig& c) { return fmt::format("\"{}\"", ref(const_cast<RunConfig&>(c))); }};
}

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> f;
  f.push_back(integer<std::uint64_t>("run", "seed", "master seed", [](RunConfig& c) -> auto& { return c.seed; }));
  f.push_back(text("run", "out", "output root; runs go to <out>/seed-<N>",
                   [](RunConfig& c) -> auto& { return c.out; }));
  f.push_back(text("run", "format", "sample/series format: json (JSON lines) or csv",
                   [](RunConfig& c) -> auto& { return c.format; }));

  f.push_back({"terrain", "pattern", "gen-terrain pattern: stripes, voronoi_patches, checkerboard",
               [](RunConfig& c, const std::string& t) { c.terrain_pattern = pattern_from_string(t); },
               [](const RunConfig& c) { return fmt::format("\"{}\"", to_string(c.terrain_pattern)); }});
  f.push_back(num("terrain", "width_m", "terrain width, m", [](RunConfig& c) -> auto& { return c.dataset.width_m; }));
  f.push_back(num("terrain", "height_m", "terrain height, m", [](RunConfig& c) -> auto& { return c.dataset.height_m; }));
  f.push_back(num("terrain", "resolution", "cell size, m", [](RunConfig& c) -> auto& { return c.dataset.resolution; }));
  f.push_back(num("terrain", "stripe_width_m", "stripe width, m",
                  [](RunConfig& c) -> auto& { return c.dataset.pattern.stripe_width_m; }));
  f.push_back(num("terrain", "tile_m", "checkerboard tile, m", [](RunConfig& c) -> auto& { return c.dataset.pattern.tile_m; }));
  f.push_back(integer<int>("terrain", "voronoi_sites", "voronoi seed points",
                           [](RunConfig& c) -> auto& { return c.dataset.pattern.voronoi_sites; }));

  f.push_back(num("rover", "wheel_radius", "m", [](RunConfig& c) -> auto& { return c.dataset.rover.wheel_radius; }));
  f.push_back(num("rover", "track_width", "m", [](RunConfig& c) -> auto& { return c.dataset.rover.track_width; }));
  f.push_back(num("rover", "mass", "kg (metadata)", [](RunConfig& c) -> auto& { return c.dataset.rover.mass; }));
  f.push_back(num("rover", "max_wheel_speed", "rad/s", [](RunConfig& c) -> auto& { return c.dataset.rover.max_wheel_speed; }));
  f.push_back(num("rover", "vo_noise_std", "visual-odometry speed noise, m/s",
                  [](RunConfig& c) -> auto& { return c.dataset.rover.vo_noise_std; }));

  f.push_back(num("controller", "kp", "heading gain", [](RunConfig& c) -> auto& { return c.dataset.gains.kp; }));
  f.push_back(num("controller", "kd", "heading rate gain", [](RunConfig& c) -> auto& { return c.dataset.gains.kd; }));
  f.push_back(num("controller", "duration_s", "per-trajectory time limit, s",
                  [](RunConfig& c) -> auto& { return c.dataset.path.duration_s; }));
  f.push_back(num("controller", "dt", "integration step, s", [](RunConfig& c) -> auto& { return c.dataset.path.dt; }));
  f.push_back(num("controller", "log_period", "sample logging period, s",
                  [](RunConfig& c) -> auto& { return c.dataset.path.log_period; }));
  f.push_back(num("controller", "goal_tolerance", "final waypoint radius, m",
                  [](RunConfig& c) -> auto& { return c.dataset.path.goal_tolerance; }));
  f.push_back(num("controller", "switch_radius", "intermediate waypoint radius, m",
                  [](RunConfig& c) -> auto& { return c.dataset.path.switch_radius; }));

  f.push_back(integer<std::size_t>("dataset", "n_trajectories", "trajectories in total",
                                   [](RunConfig& c) -> auto& { return c.dataset.n_trajectories; }));
  f.push_back(integer<std::size_t>("dataset", "n_test_trajectories", "one per test terrain",
                                   [](RunConfig& c) -> auto& { return c.dataset.n_test_trajectories; }));
  f.push_back(integer<std::size_t>("dataset", "n_train_terrains", "training terrains",
                                   [](RunConfig& c) -> auto& { return c.dataset.n_train_terrains; }));
  f.push_back(integer<std::size_t>("dataset", "total_samples", "train + test samples",
                                   [](RunConfig& c) -> auto& { return c.dataset.total_samples; }));
  f.push_back(num("dataset", "train_fraction", "share of samples for training",
                  [](RunConfig& c) -> auto& { return c.dataset.train_fraction; }));
  f.push_back(num("dataset", "annotation_fraction", "share of soils annotated",
                  [](RunConfig& c) -> auto& { return c.dataset.annotation_fraction; }));
  f.push_back(num("dataset", "train_speed_min", "commanded speed, m/s",
                  [](RunConfig& c) -> auto& { return c.dataset.train_speed_min; }));
  f.push_back(num("dataset", "train_speed_max", "commanded speed, m/s",
                  [](RunConfig& c) -> auto& { return c.dataset.train_speed_max; }));
  f.push_back(num("dataset", "test_speed_min", "commanded speed, m/s",
                  [](RunConfig& c) -> auto& { return c.dataset.test_speed_min; }));
  f.push_back(num("dataset", "test_speed_max", "commanded speed, m/s",
                  [](RunConfig& c) -> auto& { return c.dataset.test_speed_max; }));
  f.push_back(num("dataset", "waypoint_margin_m", "keep-out band at the terrain edge, m",
                  [](RunConfig& c) -> auto& { return c.dataset.waypoint_margin_m; }));
  f.push_back(num("dataset", "min_leg_m", "shortest waypoint leg, m",
                  [](RunConfig& c) -> auto& { return c.dataset.min_leg_m; }));
  f.push_back(integer<std::size_t>("dataset", "curve_samples", "slip-speed scatter points per soil",
                                   [](RunConfig& c) -> auto& { return c.curve_samples; }));

  f.push_back(num("segmentation", "epsilon", "confusion rate for annotated cells",
                  [](RunConfig& c) -> auto& { return c.dataset.confusion.epsilon; }));
  f.push_back(num("segmentation", "tau", "pseudo-class join distance",
                  [](RunConfig& c) -> auto& { return c.dataset.segment.tau; }));
  f.push_back(num("segmentation", "feature_noise_std", "per-cell feature noise",
                  [](RunConfig& c) -> auto& { return c.dataset.segment.feature_noise_std; }));

  f.push_back(integer<int>("slipnet", "basis_count", "M, bias included",
                           [](RunConfig& c) -> auto& { return c.slipnet.model.basis_count; }));
  f.push_back({"slipnet", "scale", "basis width t, m/s; \"auto\" = (range / M) * 0.8",
               [](RunConfig& c, const std::string& t) {
                 if (t == "auto")
                   c.slipnet.model.scale.reset();
                 else
                   c.slipnet.model.scale = parse_double("slipnet.scale", t);
               },
               [](const RunConfig& c) {
                 return c.slipnet.model.scale ? show(*c.slipnet.model.scale) : std::string("\"auto\"");
               }});
  f.push_back(num("slipnet", "ridge", "class-model ridge", [](RunConfig& c) -> auto& { return c.slipnet.model.ridge; }));
  f.push_back(integer<std::size_t>("slipnet", "n_min", "samples before a class leaves the prior",
                                   [](RunConfig& c) -> auto& { return c.slipnet.model.n_min; }));
  f.push_back(num("slipnet", "sigma_floor", "lower bound on sigma",
                  [](RunConfig& c) -> auto& { return c.slipnet.model.sigma_floor; }));
  f.push_back(num("slipnet", "prior_mean", "slip for unfitted classes",
                  [](RunConfig& c) -> auto& { return c.slipnet.model.prior_mean; }));
  f.push_back(num("slipnet", "prior_sigma", "sigma for unfitted classes",
                  [](RunConfig& c) -> auto& { return c.slipnet.model.prior_sigma; }));
  f.push_back(integer<std::size_t>("slipnet", "capacity", "replay buffer size",
                                   [](RunConfig& c) -> auto& { return c.slipnet.capacity; }));
  f.push_back(integer<std::size_t>("slipnet", "refit_every", "inserts between refits",
                                   [](RunConfig& c) -> auto& { return c.slipnet.refit_every; }));

  f.push_back(num("costmap", "speed", "commanded speed, m/s", [](RunConfig& c) -> auto& { return c.costmap_speed; }));
  f.push_back(text("costmap", "terrain", "\"test\" for every test terrain, or one terrain name",
                   [](RunConfig& c) -> auto& { return c.costmap_terrain; }));
  f.push_back(boolean("costmap", "observed", "overlay test samples as observed cells",
                      [](RunConfig& c) -> auto& { return c.costmap_observed; }));

  f.push_back(text("simulate", "terrain", "terrain name", [](RunConfig& c) -> auto& { return c.simulate_terrain; }));
  f.push_back(num("simulate", "speed", "commanded speed, m/s", [](RunConfig& c) -> auto& { return c.simulate_speed; }));

  f.push_back(boolean("unseen", "enabled", "run the unseen-soil experiment in eval",
                      [](RunConfig& c) -> auto& { return c.bench.run_unseen; }));
  f.push_back(integer<int>("unseen", "refits", "adaptation rounds", [](RunConfig& c) -> auto& { return c.bench.unseen.refits; }));
  f.push_back(integer<std::size_t>("unseen", "samples_per_traversal", "samples streamed per round",
                                   [](RunConfig& c) -> auto& { return c.bench.unseen.samples_per_traversal; }));
  f.push_back(integer<std::size_t>("unseen", "test_samples", "held-out samples",
                                   [](RunConfig& c) -> auto& { return c.bench.unseen.test_samples; }));
  f.push_back(num("unseen", "speed_min", "commanded speed, m/s", [](RunConfig& c) -> auto& { return c.bench.unseen.speed_min; }));
  f.push_back(num("unseen", "speed_max", "commanded speed, m/s", [](RunConfig& c) -> auto& { return c.bench.unseen.speed_max; }));
  return f;
}

const ConfigField* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : config_fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

std::string node_text(const toml::node& n, const std::string& where) {
  if (auto v = n.as_string()) return v->get();
  if (auto v = n.as_integer()) return std::to_string(v->get());
  if (auto v = n.as_floating_point()) return show(v->get());
  if (auto v = n.as_boolean()) return v->get() ? "true" : "false";
  throw InvalidArgument(where + ": expected a scalar value");
}

double node_double(const toml::node& n, const std::string& where) {
  if (auto v = n.as_integer()) return static_cast<double>(v->get());
  if (auto v = n.as_floating_point()) return v->get();
  throw InvalidArgument(where + ": expected a number");
}

void apply_soil(RunConfig& cfg, const toml::table& t, const std::string& where) {
  static const std::set<std::string> kKeys = {"id", "name", "s_max", "rise_rate", "noise_std",
                                              "visual_feature", "friction_angle_deg",
                                              "cohesion_kpa", "stiffness_modulus_kpa"};
  for (auto&& [k, v] : t)
    if (!kKeys.contains(std::string(k.str())))
      throw InvalidArgument(fmt::format("{}: unknown key '{}'", where, k.str()));
  const toml::node* idn = t.get("id");
  if (idn == nullptr || !idn->is_integer()) throw InvalidArgument(where + ": integer 'id' required");
  const auto id = static_cast<SoilId>(idn->as_integer()->get());

  std::vector<SoilSpec> soils = cfg.catalog.soils();
  auto it = std::find_if(soils.begin(), soils.end(), [&](const SoilSpec& s) { return s.id == id; });
  const bool fresh = it == soils.end();
  if (fresh) {
    for (const char* k : {"name", "s_max", "rise_rate", "noise_std", "visual_feature"})
      if (!t.contains(k))
        throw InvalidArgument(fmt::format("{}: new soil {} needs '{}'", where, id, k));
    soils.push_back(SoilSpec{});
    it = std::prev(soils.end());
    it->id = id;
  }
  SoilSpec& s = *it;
  if (auto n = t.get("name")) s.name = node_text(*n, where + ".name");
  if (auto n = t.get("s_max")) s.s_max = node_double(*n, where + ".s_max");
  if (auto n = t.get("rise_rate")) s.rise_rate = node_double(*n, where + ".rise_rate");
  if (auto n = t.get("noise_std")) s.noise_std = node_double(*n, where + ".noise_std");
  if (auto n = t.get("friction_angle_deg")) s.friction_angle_deg = node_double(*n, where);
  if (auto n = t.get("cohesion_kpa")) s.cohesion_kpa = node_double(*n, where);
  if (auto n = t.get("stiffness_modulus_kpa")) s.stiffness_modulus_kpa = node_double(*n, where);
  if (auto n = t.get("visual_feature")) {
    const toml::array* a = n->as_array();
    if (a == nullptr || a->size() != s.visual_feature.size())
      throw InvalidArgument(where + ".visual_feature: expected 4 numbers");
    for (std::size_t i = 0; i < a->size(); ++i)
      s.visual_feature[i] = node_double(*a->get(i), where + ".visual_feature");
  }
  s.validate();
  cfg.catalog = SoilCatalog(std::move(soils));
}

}  // namespace

std::string ConfigField::env_name() const { return kEnvPrefix + upper(section) + "_" + upper(key); }

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void RunConfig::validate() const {
  if (format != "json" && format != "csv")
    throw InvalidArgument("run.format must be json or csv, got '" + format + "'");
  if (out.empty()) throw InvalidArgument("run.out must not be empty");
  dataset.validate();
  if (!(dataset.path.dt > 0.0 && dataset.path.dt <= 0.1))
    throw InvalidArgument("controller.dt must lie in (0, 0.1]");
  if (!(dataset.path.log_period >= dataset.path.dt))
    throw InvalidArgument("controller.log_period must be >= controller.dt");
  if (dataset.pattern.voronoi_sites < 1) throw InvalidArgument("terrain.voronoi_sites must be >= 1");
  if (!(dataset.pattern.stripe_width_m > 0.0 && dataset.pattern.tile_m > 0.0))
    throw InvalidArgument("terrain stripe and tile sizes must be > 0");
  if (curve_samples < 1) throw InvalidArgument("dataset.curve_samples must be >= 1");
  const auto& m = slipnet.model;
  if (m.basis_count < 1) throw InvalidArgument("slipnet.basis_count must be >= 1");
  if (m.scale && !(*m.scale > 0.0)) throw InvalidArgument("slipnet.scale must be > 0");
  if (!(m.ridge >= 0.0)) throw InvalidArgument("slipnet.ridge must be >= 0");
  if (!(m.sigma_floor > 0.0)) throw InvalidArgument("slipnet.sigma_floor must be > 0");
  if (!(m.prior_sigma >= m.sigma_floor)) throw InvalidArgument("slipnet.prior_sigma must be >= sigma_floor");
  if (!(m.prior_mean >= 0.0 && m.prior_mean <= 1.0)) throw InvalidArgument("slipnet.prior_mean must lie in [0, 1]");
  if (slipnet.capacity < 1) throw InvalidArgument("slipnet.capacity must be >= 1");
  if (slipnet.refit_every < 1) throw InvalidArgument("slipnet.refit_every must be >= 1");
  if (!(costmap_speed > 0.0)) throw InvalidArgument("costmap.speed must be > 0");
  if (!(simulate_speed > 0.0)) throw InvalidArgument("simulate.speed must be > 0");
  if (bench.unseen.refits < 1) throw InvalidArgument("unseen.refits must be >= 1");
  if (bench.unseen.samples_per_traversal < 1 || bench.unseen.test_samples < 1)
    throw InvalidArgument("unseen sample counts must be >= 1");
  if (!(bench.unseen.speed_min > 0.0 && bench.unseen.speed_min <= bench.unseen.speed_max))
    throw InvalidArgument("unseen: need 0 < speed_min <= speed_max");
  if (catalog.size() < 2) throw InvalidArgument("catalog needs at least two soils");
}

std::filesystem::path RunConfig::run_dir() const {
  return std::filesystem::path(out) / fmt::format("seed-{}", seed);
}

void apply_toml(RunConfig& cfg, const std::string& text, const std::string& origin) {
  toml::table doc;
  try {
    doc = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw InvalidArgument(fmt::format("{}:{}:{}: {}", origin, b.line, b.column, e.description()));
  }
  for (auto&& [sec, node] : doc) {
    const std::string section(sec.str());
    const toml::table* t = node.as_table();
    if (t == nullptr) throw InvalidArgument(fmt::format("{}: '{}' is not a section", origin, section));
    if (section == "catalog") {
      for (auto&& [k, v] : *t) {
        if (k.str() != "soils") throw InvalidArgument(fmt::format("{}: unknown key 'catalog.{}'", origin, k.str()));
        const toml::array* arr = v.as_array();
        if (arr == nullptr || !arr->is_array_of_tables())
          throw InvalidArgument(origin + ": catalog.soils must be an array of tables");
        for (std::size_t i = 0; i < arr->size(); ++i)
          apply_soil(cfg, *arr->get(i)->as_table(), fmt::format("{}: catalog.soils[{}]", origin, i));
      }
      continue;
    }
    for (auto&& [k, v] : *t) {
      const std::string key(k.str());
      const ConfigField* f = find_field(section, key);
      if (f == nullptr) throw InvalidArgument(fmt::format("{}: unknown key '{}.{}'", origin, section, key));
      f->set(cfg, node_text(v, origin + ": " + f->dotted()));
    }
  }
}

void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& getenv) {
  for (const auto& f : config_fields()) {
    const std::string name = f.env_name();
    if (const char* v = getenv(name.c_str())) f.set(cfg, v);
  }
}

void apply_assignment(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw InvalidArgument("expected section.key=value, got '" + assignment + "'");
  const ConfigField* f = find_field(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1));
  if (f == nullptr) throw InvalidArgument("unknown key '" + assignment.substr(0, eq) + "'");
  f->set(cfg, assignment.substr(eq + 1));
}

std::string describe_defaults() {
  const RunConfig def;
  std::string out = fmt::format(
      "Configuration keys and defaults (TOML section.key; environment {}<SECTION>_<KEY>):\n", kEnvPrefix);
  std::string section;
  for (const auto& f : config_fields()) {
    if (f.section != section) {
      section = f.section;
      out += fmt::format("  [{}]\n", section);
    }
    out += fmt::format("    {:<22} = {:<22} {}\n", f.key, f.get(def), f.help);
  }
  out += "  [[catalog.soils]]  id, name, s_max, rise_rate, noise_std, visual_feature,\n"
         "                     friction_angle_deg, cohesion_kpa, stiffness_modulus_kpa\n";
  out += "    default soils:\n";
  for (const auto& s : def.catalog.soils())
    out += fmt::format("      {} {:<26} s_max={} rise_rate={} noise_std={}\n", s.id, s.name, s.s_max,
                       s.rise_rate, s.noise_std);
  return out;
}

std::string to_toml(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : config_fields()) {
    if (f.section != section) {
      section = f.section;
      out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  }
  for (const auto& s : cfg.catalog.soils()) {
    out += fmt::format(
        "\n[[catalog.soils]]\nid = {}\nname = \"{}\"\ns_max = {}\nrise_rate = {}\nnoise_std = {}\n"
        "visual_feature = [{}, {}, {}, {}]\nfriction_angle_deg = {}\ncohesion_kpa = {}\n"
        "stiffness_modulus_kpa = {}\n",
        s.id, s.name, s.s_max, s.rise_rate, s.noise_std, s.visual_feature[0], s.visual_feature[1],
        s.visual_feature[2], s.visual_feature[3], s.friction_angle_deg, s.cohesion_kpa,
        s.stiffness_modulus_kpa);
  }
  return out;
}

}  // namespace slipnet::cli
