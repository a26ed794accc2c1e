#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "slipnet/eval.hpp"
#include "slipnet/io.hpp"

namespace slipnet::cli {

// Bumped whenever a file moves or changes schema.
inline constexpr int kLayoutVersion = 1;

// Writes are confined to <out>/seed-<N>. Each command records its outputs
// and a UTC timestamp in manifest.json.
class RunDir {
 public:
  RunDir(const RunConfig& cfg, std::string command);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& rel) const;

  void json(const std::string& rel, const io::Json& j);
  void text(const std::string& rel, const std::string& s);
  void bytes(const std::string& rel, const std::vector<unsigned char>& b);
  void samples(const std::string& rel, const std::vector<SlipSample>& s);

  void finish(const RunConfig& cfg);

 private:
  std::filesystem::path root_;
  std::string command_;
  std::vector<std::string> outputs_;
};

std::string sample_extension(const RunConfig& cfg);

// Reads data/<stem>.jsonl or data/<stem>.csv, preferring the configured
// format. Throws MissingInput naming the expected path.
std::vector<SlipSample> load_samples(const RunConfig& cfg, const std::string& stem);

Dataset load_dataset(const RunConfig& cfg);
SoilCatalog load_catalog(const RunConfig& cfg);
SlipNet load_slipnet(const RunConfig& cfg);

void cmd_gen_terrain(const RunConfig& cfg, std::ostream& log);
void cmd_gen_data(const RunConfig& cfg, std::ostream& log);
void cmd_fit(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_costmap(const RunConfig& cfg, std::ostream& log);
void cmd_eval(const RunConfig& cfg, std::ostream& log);

using Getenv = std::function<const char*(const char*)>;

// Exit codes: 0 success, 2 validation error or missing input, 1 runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const Getenv& getenv);

}  // namespace slipnet::cli
