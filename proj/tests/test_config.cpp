#include <gtest/gtest.h>

#include <map>
#include <string>

#include "config.hpp"
#include "slipnet/error.hpp"

using namespace slipnet;
using namespace slipnet::cli;

namespace {

auto env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const char* name) -> const char* {
    const auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

}  // namespace

TEST(Config, DefaultsValidate) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.run_dir(), std::filesystem::path("runs") / "seed-42");
}

TEST(Config, TomlOverridesKnownKeys) {
  RunConfig cfg;
  apply_toml(cfg, "[run]\nseed = 7\nformat = \"csv\"\n[slipnet]\nbasis_count = 6\nscale = \"auto\"\n"
                  "[dataset]\ntotal_samples = 5000\n");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.format, "csv");
  EXPECT_EQ(cfg.slipnet.model.basis_count, 6);
  EXPECT_FALSE(cfg.slipnet.model.scale.has_value());
  EXPECT_EQ(cfg.dataset.total_samples, 5000u);
}

TEST(Config, UnknownKeysRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_toml(cfg, "[run]\nsed = 7\n"), InvalidArgument);
  EXPECT_THROW(apply_toml(cfg, "[nope]\nx = 1\n"), InvalidArgument);
  EXPECT_THROW(apply_toml(cfg, "[run\n"), InvalidArgument);
  EXPECT_THROW(apply_assignment(cfg, "run.sed=7"), InvalidArgument);
  EXPECT_THROW(apply_assignment(cfg, "run.seed"), InvalidArgument);
  EXPECT_THROW(apply_assignment(cfg, "run.seed=abc"), InvalidArgument);
}

TEST(Config, EnvOverride) {
  RunConfig cfg;
  apply_env(cfg, env_of({{"SLIPNET_RUN_SEED", "9"}, {"SLIPNET_ROVER_VO_NOISE_STD", "0.002"}}));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.dataset.rover.vo_noise_std, 0.002);
  EXPECT_THROW(apply_env(cfg, env_of({{"SLIPNET_RUN_SEED", "x"}})), InvalidArgument);
}

TEST(Config, Precedence) {
  RunConfig cfg;
  apply_toml(cfg, "[run]\nseed = 1\n[costmap]\nspeed = 0.2\n");
  apply_env(cfg, env_of({{"SLIPNET_RUN_SEED", "2"}, {"SLIPNET_COSTMAP_SPEED", "0.25"}}));
  apply_assignment(cfg, "run.seed=3");
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_DOUBLE_EQ(cfg.costmap_speed, 0.25);
}

TEST(Config, CatalogOverrideAndAddition) {
  RunConfig cfg;
  apply_toml(cfg, "[[catalog.soils]]\nid = 2\ns_max = 0.2\n");
  EXPECT_DOUBLE_EQ(cfg.catalog.at(2).s_max, 0.2);
  EXPECT_EQ(cfg.catalog.size(), 8u);
  apply_toml(cfg, "[[catalog.soils]]\nid = 8\nname = \"gravel\"\ns_max = 0.1\nrise_rate = 3.0\n"
                  "noise_std = 0.01\nvisual_feature = [0.1, 0.2, 0.3, 0.4]\n");
  EXPECT_EQ(cfg.catalog.size(), 9u);
  EXPECT_EQ(cfg.catalog.at(8).name, "gravel");
  EXPECT_THROW(apply_toml(cfg, "[[catalog.soils]]\nid = 9\ns_max = 0.1\n"), InvalidArgument);
  EXPECT_THROW(apply_toml(cfg, "[[catalog.soils]]\nid = 2\ncolour = 1\n"), InvalidArgument);
}

TEST(Config, ValidationErrors) {
  RunConfig cfg;
  cfg.format = "xml";
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = RunConfig{};
  apply_assignment(cfg, "costmap.speed=-1");
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Config, HelpListsEveryKey) {
  const auto help = describe_defaults();
  for (const auto& f : config_fields()) {
    const auto section = help.find("[" + f.section + "]");
    ASSERT_NE(section, std::string::npos) << f.section;
    EXPECT_NE(help.find("    " + f.key + " ", section), std::string::npos) << f.dotted();
    EXPECT_EQ(f.env_name().rfind(kEnvPrefix, 0), 0u);
  }
}

TEST(Config, TomlDumpRoundTrips) {
  RunConfig cfg;
  apply_assignment(cfg, "slipnet.n_min=12");
  apply_assignment(cfg, "terrain.pattern=checkerboard");
  RunConfig back;
  apply_toml(back, to_toml(cfg));
  EXPECT_EQ(to_toml(back), to_toml(cfg));
  EXPECT_EQ(back.slipnet.model.n_min, 12u);
}
