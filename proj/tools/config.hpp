#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "slipnet/eval.hpp"
#include "slipnet/slipnet_core.hpp"
#include "slipnet/terrain.hpp"

namespace slipnet::cli {

inline constexpr const char* kEnvPrefix = "SLIPNET_";

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out = "runs";
  std::string format = "json";  // json | csv

  TerrainPattern terrain_pattern = TerrainPattern::kStripes;  // gen-terrain only
  DatasetSpec dataset;
  std::size_t curve_samples = 500;  // per soil
  SlipNetConfig slipnet;

  double costmap_speed = 0.3;
  std::string costmap_terrain = "test";  // "test" = every test terrain, else a terrain name
  bool costmap_observed = false;         // mark cells holding test samples as observed

  std::string simulate_terrain = "test-5-desert-sand";
  double simulate_speed = 0.3;

  BenchmarkOptions bench;

  SoilCatalog catalog = default_catalog();

  // Throws InvalidArgument.
  void validate() const;
  std::filesystem::path run_dir() const;
};

// One scalar config key. `set` parses text; `get` prints the current value.
struct ConfigField {
  std::string section;
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string dotted() const { return section + "." + key; }
  std::string env_name() const;  // SLIPNET_<SECTION>_<KEY>
};

const std::vector<ConfigField>& config_fields();

// Applies a TOML document. Unknown sections or keys throw InvalidArgument.
// [[catalog.soils]] entries override default soils by id or add new ones.
void apply_toml(RunConfig& cfg, const std::string& text, const std::string& origin = "config");

// Applies every SLIPNET_<SECTION>_<KEY> variable that `getenv` returns.
void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& getenv);

// "section.key=value"
void apply_assignment(RunConfig& cfg, const std::string& assignment);

// Every key with its default value and help, for --help.
std::string describe_defaults();

// Resolved config as a TOML document (catalog included).
std::string to_toml(const RunConfig& cfg);

}  // namespace slipnet::cli
