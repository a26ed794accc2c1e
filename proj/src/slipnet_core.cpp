#include "slipnet/slipnet_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "slipnet/error.hpp"

namespace slipnet {

NllResult nll_loss(std::span<const double> means, std::span<const double> sigmas,
                   std::span<const double> targets, std::span<const std::uint8_t> valid_mask,
                   double sigma_floor) {
  if (means.size() != sigmas.size() || means.size() != targets.size())
    throw InvalidArgument("nll_loss: length mismatch");
  if (!valid_mask.empty() && valid_mask.size() != means.size())
    throw InvalidArgument("nll_loss: mask length mismatch");
  NllResult r;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!valid_mask.empty() && valid_mask[i] == 0) continue;
    const double s = sigmas[i];
    if (!(s >= sigma_floor)) throw InvalidArgument("nll_loss: sigma below floor");
    const double d = means[i] - targets[i];
    r.sum += d * d / (2.0 * s * s) + std::log(s);
    ++r.n_valid;
  }
  if (r.n_valid == 0) throw InvalidArgument("nll_loss: no valid pixels");
  r.mean = r.sum / static_cast<double>(r.n_valid);
  return r;
}

ClassSlipModel ClassSlipModel::prior(ClassLabel label, std::size_t n, const ClassModelConfig& cfg) {
  ClassSlipModel m;
  m.label = label;
  m.mean_model = GaussianBasisModel::constant(cfg.prior_mean);
  m.sigma = cfg.prior_sigma;
  m.n_samples = n;
  m.is_prior = true;
  return m;
}

double ClassSlipModel::mean_at(double speed) const {
  double v = speed;
  if (!is_prior) v = std::clamp(speed, mean_model.range_min(), mean_model.range_max());
  return predict_slip(mean_model, v).clamped;
}

double ClassSlipModel::nll(double speed, double slip) const {
  const double d = mean_at(speed) - slip;
  return d * d / (2.0 * sigma * sigma) + std::log(sigma);
}

ClassSlipModel fit_class_model(ClassLabel label, std::span<const SpeedSlip> samples,
                               const ClassModelConfig& cfg) {
  if (samples.size() < cfg.n_min) return ClassSlipModel::prior(label, samples.size(), cfg);

  ClassSlipModel m;
  m.label = label;
  m.n_samples = samples.size();
  m.is_prior = false;
  BasisFitOptions opts;
  opts.basis_count = cfg.basis_count;
  opts.scale = cfg.scale;
  opts.ridge = cfg.ridge;
  try {
    m.mean_model = fit_basis_regression(samples, opts);
  } catch (const DegenerateDesign&) {
    // Single commanded speed: the best constant is the sample mean.
    BasisFitOptions flat;
    flat.basis_count = 1;
    flat.ridge = cfg.ridge;
    m.mean_model = fit_basis_regression(samples, flat);
  }
  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.slip - m.mean_at(s.speed);
    sse += r * r;
  }
  m.sigma = std::max(cfg.sigma_floor, std::sqrt(sse / static_cast<double>(samples.size())));
  return m;
}

ClassSlipModel ModelRegistry::lookup(ClassLabel label) const {
  auto it = models_.find(label);
  if (it != models_.end()) return it->second;
  return ClassSlipModel::prior(label, 0, cfg_);
}

void ModelRegistry::put(ClassSlipModel model) {
  const ClassLabel key = model.label;
  models_.insert_or_assign(key, std::move(model));
}

bool ModelRegistry::operator==(const ModelRegistry& o) const {
  if (models_.size() != o.models_.size()) return false;
  for (const auto& [label, m] : models_) {
    auto it = o.models_.find(label);
    if (it == o.models_.end()) return false;
    const auto& n = it->second;
    if (m.sigma != n.sigma || m.n_samples != n.n_samples || m.is_prior != n.is_prior ||
        m.mean_model.weights() != n.mean_model.weights() ||
        m.mean_model.centers() != n.mean_model.centers() ||
        m.mean_model.scale() != n.mean_model.scale())
      return false;
  }
  return true;
}

double sample_priority(const ClassSlipModel& model, const SlipSample& sample,
                       double sigma_floor) {
  // Capped so that sums of priorities stay finite.
  constexpr double kMaxPriority = 1e6;
  const double p = model.nll(sample.v_ref, sample.slip) - std::log(sigma_floor);
  return std::isfinite(p) ? std::clamp(p, 0.0, kMaxPriority) : kMaxPriority;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("replay buffer capacity must be >= 1");
  entries_.reserve(capacity_ + 1);
}

void ReplayBuffer::clear_pending() {
  pending_ = 0;
  dirty_.clear();
}

void ReplayBuffer::insert(const SlipSample& sample, const ModelRegistry& models) {
  const ClassSlipModel model = models.lookup(sample.class_observed);
  entries_.push_back({sample, sample_priority(model, sample, models.config().sigma_floor),
                      next_seq_++});
  ++pending_;
  dirty_.insert(sample.class_observed);
  if (entries_.size() > capacity_) evict_one();
}

void ReplayBuffer::evict_one() {
  auto victim = std::min_element(entries_.begin(), entries_.end(),
                                 [](const BufferEntry& a, const BufferEntry& b) {
                                   if (a.priority != b.priority) return a.priority < b.priority;
                                   return a.seq < b.seq;
                                 });
  *victim = std::move(entries_.back());
  entries_.pop_back();
}

void ReplayBuffer::reprioritize(const ModelRegistry& models) {
  std::map<ClassLabel, ClassSlipModel> cache;
  for (auto& e : entries_) {
    auto it = cache.find(e.sample.class_observed);
    if (it == cache.end())
      it = cache.emplace(e.sample.class_observed, models.lookup(e.sample.class_observed)).first;
    e.priority = sample_priority(it->second, e.sample, models.config().sigma_floor);
  }
}

std::vector<SpeedSlip> ReplayBuffer::class_samples(ClassLabel label) const {
  std::vector<const BufferEntry*> picked;
  for (const auto& e : entries_)
    if (e.sample.class_observed == label) picked.push_back(&e);
  std::sort(picked.begin(), picked.end(),
            [](const BufferEntry* a, const BufferEntry* b) { return a->seq < b->seq; });
  std::vector<SpeedSlip> out;
  out.reserve(picked.size());
  for (const auto* e : picked) out.push_back({e->sample.v_ref, e->sample.slip});
  return out;
}

double ReplayBuffer::total_priority() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0.0,
                         [](double acc, const BufferEntry& e) { return acc + e.priority; });
}

std::vector<BufferEntry> ReplayBuffer::ordered() const {
  std::vector<BufferEntry> out = entries_;
  std::sort(out.begin(), out.end(),
            [](const BufferEntry& a, const BufferEntry& b) { return a.seq < b.seq; });
  return out;
}

void ReplayBuffer::restore(std::vector<BufferEntry> entries, std::uint64_t next_seq,
                           std::size_t pending, std::set<ClassLabel> dirty) {
  if (entries.size() > capacity_) throw InvalidArgument("replay buffer: entries exceed capacity");
  for (const auto& e : entries) {
    if (!(e.priority >= 0.0) || !std::isfinite(e.priority))
      throw InvalidArgument("replay buffer: priority must be finite and >= 0");
    if (e.seq >= next_seq) throw InvalidArgument("replay buffer: entry newer than next_seq");
  }
  entries_ = std::move(entries);
  entries_.reserve(capacity_ + 1);
  next_seq_ = next_seq;
  pending_ = pending;
  dirty_ = std::move(dirty);
}

void buffer_insert(ReplayBuffer& buffer, std::span<const SlipSample> samples,
                   const ModelRegistry& models) {
  for (const auto& s : samples)
    if (s.class_observed.valid()) buffer.insert(s, models);
}

void refit_now(ReplayBuffer& buffer, ModelRegistry& registry) {
  for (ClassLabel label : buffer.dirty_classes()) {
    const auto data = buffer.class_samples(label);
    registry.put(fit_class_model(label, data, registry.config()));
  }
  buffer.reprioritize(registry);
  buffer.clear_pending();
}

bool update_models(ReplayBuffer& buffer, ModelRegistry& registry, std::size_t refit_every) {
  if (refit_every == 0) throw InvalidArgument("refit_every must be >= 1");
  if (buffer.pending() < refit_every) return false;
  refit_now(buffer, registry);
  return true;
}

SlipNet::SlipNet(SlipNetConfig cfg)
    : cfg_(std::move(cfg)), registry_(cfg_.model), buffer_(cfg_.capacity) {
  if (cfg_.refit_every == 0) throw InvalidArgument("refit_every must be >= 1");
}

void SlipNet::restore(ModelRegistry registry, ReplayBuffer buffer, std::size_t refits) {
  if (buffer.capacity() != cfg_.capacity)
    throw InvalidArgument("restored buffer capacity differs from the configuration");
  registry_ = std::move(registry);
  buffer_ = std::move(buffer);
  refits_ = refits;
}

std::size_t SlipNet::observe(std::span<const SlipSample> samples) {
  std::size_t refits = 0;
  for (const auto& s : samples) {
    if (!s.class_observed.valid()) continue;
    buffer_.insert(s, registry_);
    if (update_models(buffer_, registry_, cfg_.refit_every)) ++refits;
  }
  refits_ += refits;
  return refits;
}

void SlipNet::flush() {
  if (buffer_.pending() == 0) return;
  refit_now(buffer_, registry_);
  ++refits_;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kPrior: return "prior";
    case Provenance::kPredicted: return "predicted";
    case Provenance::kObserved: return "observed";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "prior") return Provenance::kPrior;
  if (s == "predicted") return Provenance::kPredicted;
  if (s == "observed") return Provenance::kObserved;
  throw InvalidArgument("unknown provenance '" + s + "'");
}

SlipCostMap build_slip_cost_map(const SegmentationMap& seg, const ModelRegistry& registry,
                                double v, std::span<const SlipSample> observations) {
  if (!(v > 0.0)) throw InvalidArgument("build_slip_cost_map: speed must be > 0");
  SlipCostMap map;
  map.width_m = seg.width_m();
  map.height_m = seg.height_m();
  map.resolution = seg.resolution();
  map.rows = seg.rows();
  map.cols = seg.cols();
  map.speed = v;

  std::map<ClassLabel, CostCell> per_class;
  auto class_cell = [&](ClassLabel label) {
    auto it = per_class.find(label);
    if (it != per_class.end()) return it->second;
    const ClassSlipModel m = registry.lookup(label);
    CostCell c;
    if (m.is_prior) {
      c.mean = std::clamp(registry.config().prior_mean, 0.0, 1.0);
      c.std = registry.config().prior_sigma;
      c.provenance = Provenance::kPrior;
    } else {
      c.mean = m.mean_at(v);
      c.std = m.sigma;
      c.provenance = Provenance::kPredicted;
    }
    c.band = classify_band(c.mean);
    per_class.emplace(label, c);
    return c;
  };

  map.cells.reserve(seg.cells().size());
  for (ClassLabel label : seg.cells()) map.cells.push_back(class_cell(label));

  if (!observations.empty()) {
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& s : observations) {
      if (!(s.x >= 0.0 && s.y >= 0.0 && s.x < map.width_m && s.y < map.height_m)) continue;
      const int col = std::min(map.cols - 1, static_cast<int>(std::floor(s.x / map.resolution)));
      const int row = std::min(map.rows - 1, static_cast<int>(std::floor(s.y / map.resolution)));
      auto& a = acc[static_cast<std::size_t>(row) * static_cast<std::size_t>(map.cols) +
                    static_cast<std::size_t>(col)];
      a.first += s.slip;
      ++a.second;
    }
    for (const auto& [idx, a] : acc) {
      CostCell& c = map.cells[idx];
      c.mean = std::clamp(a.first / static_cast<double>(a.second), 0.0, 1.0);
      c.band = classify_band(c.mean);
      c.provenance = Provenance::kObserved;
    }
  }
  return map;
}

bool cost_map_consistent(const SlipCostMap& map) {
  if (map.cells.size() != static_cast<std::size_t>(map.rows) * static_cast<std::size_t>(map.cols))
    return false;
  for (const auto& c : map.cells) {
    if (!(c.mean >= 0.0 && c.mean <= 1.0)) return false;
    if (!(c.std >= 0.0) || !std::isfinite(c.std)) return false;
    if (c.band != classify_band(c.mean)) return false;
  }
  return true;
}

}  // namespace slipnet
