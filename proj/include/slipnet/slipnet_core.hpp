#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "slipnet/class_label.hpp"
#include "slipnet/rover_sim.hpp"
#include "slipnet/segmentation.hpp"
#include "slipnet/slip_risk.hpp"

namespace slipnet {

inline constexpr double kSigmaFloor = 1e-3;

struct NllResult {
  double sum = 0.0;   // sum over valid pixels
  double mean = 0.0;  // sum / n_valid
  std::size_t n_valid = 0;
};

// Gaussian negative log-likelihood sum_i (m_i - t_i)^2 / (2 s_i^2) + log s_i
// over entries with valid_mask[i] set. An empty mask span means all valid.
NllResult nll_loss(std::span<const double> means, std::span<const double> sigmas,
                   std::span<const double> targets, std::span<const std::uint8_t> valid_mask = {},
                   double sigma_floor = kSigmaFloor);

struct ClassModelConfig {
  int basis_count = 8;
  // Wider and more strongly regularised than the bare regression default:
  // streamed class data cluster at a few commanded speeds, and narrow
  // Gaussians centred in the gaps between clusters are otherwise unconstrained.
  std::optional<double> scale = 0.08;  // unset: (range / M) * 0.8
  double ridge = 1e-3;
  std::size_t n_min = 30;
  double sigma_floor = kSigmaFloor;
  double prior_mean = 0.3;
  double prior_sigma = 0.15;
};

struct ClassSlipModel {
  ClassLabel label;
  GaussianBasisModel mean_model;  // constant prior_mean when is_prior
  double sigma = 0.15;
  std::size_t n_samples = 0;
  bool is_prior = true;

  static ClassSlipModel prior(ClassLabel label, std::size_t n, const ClassModelConfig& cfg);

  // Predicted mean slip in [0, 1]. Query speeds are held inside the fitted
  // speed range; the Gaussian basis decays to the bias term outside it.
  double mean_at(double speed) const;
  // Per-sample NLL of an observed slip.
  double nll(double speed, double slip) const;
};

// n >= n_min: basis-regression mean and sigma = max(floor, RMS residual),
// the closed-form minimiser of the NLL for a fixed mean. Otherwise the prior.
ClassSlipModel fit_class_model(ClassLabel label, std::span<const SpeedSlip> samples,
                               const ClassModelConfig& cfg = {});

class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(ClassModelConfig cfg) : cfg_(std::move(cfg)) {}

  const ClassModelConfig& config() const { return cfg_; }
  const std::map<ClassLabel, ClassSlipModel>& models() const { return models_; }

  // Stored model, or the prior for a class never fitted.
  ClassSlipModel lookup(ClassLabel label) const;
  bool has(ClassLabel label) const { return models_.contains(label); }
  void put(ClassSlipModel model);

  bool operator==(const ModelRegistry& o) const;

 private:
  ClassModelConfig cfg_;
  std::map<ClassLabel, ClassSlipModel> models_;
};

struct BufferEntry {
  SlipSample sample;
  double priority = 0.0;
  std::uint64_t seq = 0;  // insertion order
};

// Bounded store of slip samples. Priority is the sample's NLL under its class
// model, offset by -log(sigma_floor) so it is never negative. When full the
// lowest-priority entry is evicted, oldest first on ties.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 4096);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }

  // Inserted since the last refit, and the classes they belong to.
  std::size_t pending() const { return pending_; }
  const std::set<ClassLabel>& dirty_classes() const { return dirty_; }
  void clear_pending();

  void insert(const SlipSample& sample, const ModelRegistry& models);
  void reprioritize(const ModelRegistry& models);
  std::vector<SpeedSlip> class_samples(ClassLabel label) const;
  double total_priority() const;

  // Entries sorted by insertion order; independent of internal layout.
  std::vector<BufferEntry> ordered() const;
  std::uint64_t next_seq() const { return next_seq_; }

  // Rebuilds a saved buffer. Throws InvalidArgument when the entries exceed
  // capacity or carry negative or non-finite priorities.
  void restore(std::vector<BufferEntry> entries, std::uint64_t next_seq, std::size_t pending,
               std::set<ClassLabel> dirty);

 private:
  void evict_one();

  std::size_t capacity_;
  std::vector<BufferEntry> entries_;
  std::uint64_t next_seq_ = 0;
  std::size_t pending_ = 0;
  std::set<ClassLabel> dirty_;
};

double sample_priority(const ClassSlipModel& model, const SlipSample& sample, double sigma_floor);

// Samples without a valid class label are skipped.
void buffer_insert(ReplayBuffer& buffer, std::span<const SlipSample> samples,
                   const ModelRegistry& models);

// Once at least `refit_every` samples arrived since the last refit, refits
// every class that received data from its buffer entries and recomputes all
// priorities. Returns true if a refit happened.
bool update_models(ReplayBuffer& buffer, ModelRegistry& registry, std::size_t refit_every);

// Refit dirty classes unconditionally.
void refit_now(ReplayBuffer& buffer, ModelRegistry& registry);

struct SlipNetConfig {
  ClassModelConfig model;
  std::size_t capacity = 4096;
  std::size_t refit_every = 200;
};

// Registry plus replay buffer, updated as in-situ samples stream in. Single
// writer; copies are independent.
class SlipNet {
 public:
  explicit SlipNet(SlipNetConfig cfg = {});

  const SlipNetConfig& config() const { return cfg_; }
  const ModelRegistry& registry() const { return registry_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t refit_count() const { return refits_; }

  // Inserts one sample at a time, refitting after every refit_every inserts.
  // Returns the number of refits triggered.
  std::size_t observe(std::span<const SlipSample> samples);
  void flush();

  void set_registry(ModelRegistry r) { registry_ = std::move(r); }
  void restore(ModelRegistry registry, ReplayBuffer buffer, std::size_t refits);

 private:
  SlipNetConfig cfg_;
  ModelRegistry registry_;
  ReplayBuffer buffer_;
  std::size_t refits_ = 0;
};

enum class Provenance : std::uint8_t { kPrior, kPredicted, kObserved };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct CostCell {
  double mean = 0.0;
  double std = 0.0;
  SlipRiskBand band;
  Provenance provenance = Provenance::kPrior;

  bool operator==(const CostCell&) const = default;
};

struct SlipCostMap {
  double width_m = 0.0;
  double height_m = 0.0;
  double resolution = 1.0;
  int rows = 0;
  int cols = 0;
  double speed = 0.0;  // commanded speed the map was built for
  std::vector<CostCell> cells;

  const CostCell& cell(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                 static_cast<std::size_t>(col)];
  }
  bool operator==(const SlipCostMap&) const = default;
};

// Per-cell class lookup at commanded speed v (> 0). Cells holding in-situ
// observations become `observed` with their mean measured slip.
SlipCostMap build_slip_cost_map(const SegmentationMap& seg, const ModelRegistry& registry,
                                double v, std::span<const SlipSample> observations = {});

// Band matches the mean and values lie in [0, 1] for every cell.
bool cost_map_consistent(const SlipCostMap& map);

}  // namespace slipnet
