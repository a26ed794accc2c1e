#include "slipnet/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "slipnet/error.hpp"

namespace slipnet::io {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {

// Wraps nlohmann type errors so callers see one validation error type.
template <typename F>
auto checked(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const SoilSpec& s) {
  return Json{{"id", s.id},
              {"name", s.name},
              {"s_max", s.s_max},
              {"rise_rate", s.rise_rate},
              {"noise_std", s.noise_std},
              {"visual_feature", s.visual_feature},
              {"friction_angle_deg", s.friction_angle_deg},
              {"cohesion_kpa", s.cohesion_kpa},
              {"stiffness_modulus_kpa", s.stiffness_modulus_kpa}};
}

SoilSpec soil_from_json(const Json& j) {
  return checked("soil", [&] {
    SoilSpec s;
    s.id = j.at("id").get<SoilId>();
    s.name = j.at("name").get<std::string>();
    s.s_max = j.at("s_max").get<double>();
    s.rise_rate = j.at("rise_rate").get<double>();
    s.noise_std = j.at("noise_std").get<double>();
    s.visual_feature = j.at("visual_feature").get<FeatureVector>();
    s.friction_angle_deg = j.value("friction_angle_deg", 0.0);
    s.cohesion_kpa = j.value("cohesion_kpa", 0.0);
    s.stiffness_modulus_kpa = j.value("stiffness_modulus_kpa", 0.0);
    s.validate();
    return s;
  });
}

Json to_json(const SoilCatalog& c) {
  Json arr = Json::array();
  for (const auto& s : c.soils()) arr.push_back(to_json(s));
  return Json{{"soils", arr}};
}

SoilCatalog catalog_from_json(const Json& j) {
  return checked("catalog", [&] {
    std::vector<SoilSpec> soils;
    for (const auto& s : j.at("soils")) soils.push_back(soil_from_json(s));
    return SoilCatalog(std::move(soils));
  });
}

Json to_json(const TerrainGrid& g) {
  return Json{{"width_m", g.width_m()}, {"height_m", g.height_m()}, {"resolution", g.resolution()},
              {"rows", g.rows()},       {"cols", g.cols()},         {"cells", g.cells()}};
}

TerrainGrid terrain_from_json(const Json& j) {
  return checked("terrain", [&] {
    return TerrainGrid(j.at("width_m").get<double>(), j.at("height_m").get<double>(),
                       j.at("resolution").get<double>(), j.at("cells").get<std::vector<SoilId>>());
  });
}

Json to_json(const SlipSample& s) {
  return Json{{"t", s.t},
              {"x", s.x},
              {"y", s.y},
              {"soil_true", s.soil_true},
              {"class_observed", s.class_observed.str()},
              {"v_ref", s.v_ref},
              {"v_x", s.v_x},
              {"slip", s.slip},
              {"wheel", to_string(s.wheel)},
              {"trajectory_id", s.trajectory_id},
              {"terrain_id", s.terrain_id}};
}

SlipSample sample_from_json(const Json& j) {
  return checked("sample", [&] {
    SlipSample s;
    s.t = j.at("t").get<double>();
    s.x = j.at("x").get<double>();
    s.y = j.at("y").get<double>();
    s.soil_true = j.at("soil_true").get<SoilId>();
    s.class_observed = ClassLabel::parse(j.at("class_observed").get<std::string>());
    s.v_ref = j.at("v_ref").get<double>();
    s.v_x = j.at("v_x").get<double>();
    s.slip = j.at("slip").get<double>();
    s.wheel = wheel_from_string(j.at("wheel").get<std::string>());
    s.trajectory_id = j.at("trajectory_id").get<std::int32_t>();
    s.terrain_id = j.at("terrain_id").get<std::int32_t>();
    return s;
  });
}

std::string samples_to_jsonl(const std::vector<SlipSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<SlipSample> samples_from_jsonl(const std::string& text) {
  std::vector<SlipSample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw InvalidArgument(fmt::format("samples line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

std::string samples_to_csv(const std::vector<SlipSample>& samples) {
  std::string out = std::string(kSampleCsvHeader) + "\n";
  for (const auto& s : samples)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.t, s.x, s.y, s.soil_true,
                       s.class_observed.str(), s.v_ref, s.v_x, s.slip, to_string(s.wheel),
                       s.trajectory_id, s.terrain_id);
  return out;
}

namespace {

double parse_double(const std::string& f, std::size_t lineno) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(f, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != f.size() || f.empty())
    throw InvalidArgument(fmt::format("samples line {}: bad number '{}'", lineno, f));
  return v;
}

std::int32_t parse_int(const std::string& f, std::size_t lineno) {
  const double v = parse_double(f, lineno);
  if (v != std::floor(v)) throw InvalidArgument(fmt::format("samples line {}: bad integer", lineno));
  return static_cast<std::int32_t>(v);
}

}  // namespace

std::vector<SlipSample> samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<SlipSample> out;
  if (!std::getline(in, line) || line != kSampleCsvHeader)
    throw InvalidArgument("samples csv: unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw InvalidArgument(fmt::format("samples line {}: expected 11 fields", lineno));
    SlipSample s;
    s.t = parse_double(f[0], lineno);
    s.x = parse_double(f[1], lineno);
    s.y = parse_double(f[2], lineno);
    s.soil_true = parse_int(f[3], lineno);
    s.class_observed = ClassLabel::parse(f[4]);
    s.v_ref = parse_double(f[5], lineno);
    s.v_x = parse_double(f[6], lineno);
    s.slip = parse_double(f[7], lineno);
    s.wheel = wheel_from_string(f[8]);
    s.trajectory_id = parse_int(f[9], lineno);
    s.terrain_id = parse_int(f[10], lineno);
    out.push_back(s);
  }
  return out;
}

void write_samples(const fs::path& path, const std::vector<SlipSample>& samples) {
  if (path.extension() == ".csv")
    write_text(path, samples_to_csv(samples));
  else
    write_text(path, samples_to_jsonl(samples));
}

std::vector<SlipSample> read_samples(const fs::path& path) {
  const std::string text = read_text(path);
  return path.extension() == ".csv" ? samples_from_csv(text) : samples_from_jsonl(text);
}

Json to_json(const GaussianBasisModel& m) {
  const auto& d = m.diagnostics();
  return Json{{"centers", m.centers()},
              {"scale", m.scale()},
              {"weights", m.weights()},
              {"range", {m.range_min(), m.range_max()}},
              {"diagnostics",
               {{"objective", d.objective}, {"residual_std", d.residual_std}, {"n", d.n}}}};
}

GaussianBasisModel basis_model_from_json(const Json& j) {
  return checked("basis model", [&] {
    GaussianBasisModel m(j.at("centers").get<std::vector<double>>(), j.at("scale").get<double>(),
                         j.at("weights").get<std::vector<double>>());
    const auto& r = j.at("range");
    m.set_range(r.at(0).get<double>(), r.at(1).get<double>());
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      m.set_diagnostics({d.at("objective").get<double>(), d.at("residual_std").get<double>(),
                         d.at("n").get<std::size_t>()});
    }
    return m;
  });
}

Json to_json(const ClassModelConfig& c) {
  Json j{{"basis_count", c.basis_count},
         {"scale", nullptr},
         {"ridge", c.ridge},
         {"n_min", c.n_min},
         {"sigma_floor", c.sigma_floor},
         {"prior_mean", c.prior_mean},
         {"prior_sigma", c.prior_sigma}};
  if (c.scale) j["scale"] = *c.scale;
  return j;
}

ClassModelConfig class_config_from_json(const Json& j) {
  return checked("class model config", [&] {
    ClassModelConfig c;
    c.basis_count = j.at("basis_count").get<int>();
    c.scale = j.at("scale").is_null() ? std::nullopt
                                      : std::optional<double>(j.at("scale").get<double>());
    c.ridge = j.at("ridge").get<double>();
    c.n_min = j.at("n_min").get<std::size_t>();
    c.sigma_floor = j.at("sigma_floor").get<double>();
    c.prior_mean = j.at("prior_mean").get<double>();
    c.prior_sigma = j.at("prior_sigma").get<double>();
    return c;
  });
}

Json to_json(const ClassSlipModel& m) {
  return Json{{"label", m.label.str()},
              {"is_prior", m.is_prior},
              {"n_samples", m.n_samples},
              {"sigma", m.sigma},
              {"mean_model", to_json(m.mean_model)}};
}

ClassSlipModel class_model_from_json(const Json& j) {
  return checked("class model", [&] {
    ClassSlipModel m;
    m.label = ClassLabel::parse(j.at("label").get<std::string>());
    m.is_prior = j.at("is_prior").get<bool>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.sigma = j.at("sigma").get<double>();
    m.mean_model = basis_model_from_json(j.at("mean_model"));
    return m;
  });
}

Json to_json(const ModelRegistry& r) {
  Json models = Json::array();
  for (const auto& [label, m] : r.models()) models.push_back(to_json(m));
  return Json{{"config", to_json(r.config())}, {"models", models}};
}

ModelRegistry registry_from_json(const Json& j) {
  return checked("registry", [&] {
    ModelRegistry r(class_config_from_json(j.at("config")));
    for (const auto& m : j.at("models")) r.put(class_model_from_json(m));
    return r;
  });
}

Json to_json(const AnnotationSet& a) { return Json{{"annotated", a.ids()}}; }

AnnotationSet annotation_from_json(const Json& j) {
  return checked("annotation", [&] {
    return AnnotationSet(j.at("annotated").get<std::set<SoilId>>());
  });
}

Json to_json(const PseudoClassRegistry& p) {
  Json arr = Json::array();
  for (const auto& c : p.clusters())
    arr.push_back({{"label", c.label.str()}, {"center", c.center}, {"count", c.count}});
  return Json{{"clusters", arr}};
}

PseudoClassRegistry pseudo_from_json(const Json& j) {
  return checked("pseudo registry", [&] {
    std::vector<PseudoCluster> clusters;
    for (const auto& c : j.at("clusters")) {
      PseudoCluster pc;
      pc.label = ClassLabel::parse(c.at("label").get<std::string>());
      pc.center = c.at("center").get<FeatureVector>();
      pc.count = c.at("count").get<std::size_t>();
      clusters.push_back(pc);
    }
    PseudoClassRegistry p;
    p.restore(std::move(clusters));
    return p;
  });
}

Json to_json(const SlipNet& net) {
  const auto& b = net.buffer();
  Json entries = Json::array();
  for (const auto& e : b.ordered())
    entries.push_back({{"seq", e.seq}, {"priority", e.priority}, {"sample", to_json(e.sample)}});
  Json dirty = Json::array();
  for (ClassLabel l : b.dirty_classes()) dirty.push_back(l.str());
  return Json{{"capacity", net.config().capacity},
              {"refit_every", net.config().refit_every},
              {"refit_count", net.refit_count()},
              {"registry", to_json(net.registry())},
              {"buffer",
               {{"next_seq", b.next_seq()},
                {"pending", b.pending()},
                {"dirty", dirty},
                {"entries", entries}}}};
}

SlipNet slipnet_from_json(const Json& j) {
  return checked("slipnet state", [&] {
    SlipNetConfig cfg;
    ModelRegistry reg = registry_from_json(j.at("registry"));
    cfg.model = reg.config();
    cfg.capacity = j.at("capacity").get<std::size_t>();
    cfg.refit_every = j.at("refit_every").get<std::size_t>();
    SlipNet net(cfg);
    const auto& jb = j.at("buffer");
    std::vector<BufferEntry> entries;
    for (const auto& e : jb.at("entries"))
      entries.push_back({sample_from_json(e.at("sample")), e.at("priority").get<double>(),
                         e.at("seq").get<std::uint64_t>()});
    std::set<ClassLabel> dirty;
    for (const auto& d : jb.at("dirty")) dirty.insert(ClassLabel::parse(d.get<std::string>()));
    ReplayBuffer buf(cfg.capacity);
    buf.restore(std::move(entries), jb.at("next_seq").get<std::uint64_t>(),
                jb.at("pending").get<std::size_t>(), std::move(dirty));
    net.restore(std::move(reg), std::move(buf), j.at("refit_count").get<std::size_t>());
    return net;
  });
}

Json to_json(const SegmentationMap& m) {
  Json cells = Json::array();
  for (ClassLabel l : m.cells()) cells.push_back(l.str());
  return Json{{"width_m", m.width_m()}, {"height_m", m.height_m()}, {"resolution", m.resolution()},
              {"rows", m.rows()},       {"cols", m.cols()},         {"cells", cells}};
}

SegmentationMap segmentation_from_json(const Json& j) {
  return checked("segmentation", [&] {
    std::vector<ClassLabel> cells;
    std::map<std::string, ClassLabel> seen;
    for (const auto& c : j.at("cells")) {
      const auto& s = c.get_ref<const std::string&>();
      auto it = seen.find(s);
      if (it == seen.end()) it = seen.emplace(s, ClassLabel::parse(s)).first;
      cells.push_back(it->second);
    }
    return SegmentationMap(j.at("width_m").get<double>(), j.at("height_m").get<double>(),
                           j.at("resolution").get<double>(), std::move(cells));
  });
}

Json to_json(const SlipCostMap& m) {
  Json mean = Json::array();
  Json std_ = Json::array();
  Json band = Json::array();
  Json prov = Json::array();
  for (const auto& c : m.cells) {
    mean.push_back(c.mean);
    std_.push_back(c.std);
    band.push_back(c.band.index());
    prov.push_back(to_string(c.provenance));
  }
  return Json{{"width_m", m.width_m}, {"height_m", m.height_m}, {"resolution", m.resolution},
              {"rows", m.rows},       {"cols", m.cols},         {"speed", m.speed},
              {"mean", mean},         {"std", std_},            {"band", band},
              {"provenance", prov}};
}

SlipCostMap cost_map_from_json(const Json& j) {
  return checked("cost map", [&] {
    SlipCostMap m;
    m.width_m = j.at("width_m").get<double>();
    m.height_m = j.at("height_m").get<double>();
    m.resolution = j.at("resolution").get<double>();
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    m.speed = j.at("speed").get<double>();
    const auto& mean = j.at("mean");
    const auto& sd = j.at("std");
    const auto& band = j.at("band");
    const auto& prov = j.at("provenance");
    const std::size_t n = static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols);
    if (mean.size() != n || sd.size() != n || band.size() != n || prov.size() != n)
      throw InvalidArgument("cost map: layer sizes do not match rows * cols");
    m.cells.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.cells[i].mean = mean[i].get<double>();
      m.cells[i].std = sd[i].get<double>();
      m.cells[i].band = SlipRiskBand(band[i].get<int>());
      m.cells[i].provenance = provenance_from_string(prov[i].get<std::string>());
    }
    if (!cost_map_consistent(m)) throw InvalidArgument("cost map: band/mean mismatch or value outside [0, 1]");
    return m;
  });
}

Json to_json(const TerrainInstance& t) {
  return Json{{"id", t.id},
              {"name", t.name},
              {"split", to_string(t.split)},
              {"pattern", to_string(t.pattern)},
              {"seed", t.seed},
              {"soils", t.soils},
              {"grid", to_json(t.grid)},
              {"segmentation", to_json(t.segmentation)}};
}

TerrainInstance terrain_instance_from_json(const Json& j) {
  return checked("terrain instance", [&] {
    TerrainInstance t;
    t.id = j.at("id").get<std::int32_t>();
    t.name = j.at("name").get<std::string>();
    const auto split = j.at("split").get<std::string>();
    if (split != "train" && split != "test") throw InvalidArgument("unknown split '" + split + "'");
    t.split = split == "train" ? Split::kTrain : Split::kTest;
    t.pattern = pattern_from_string(j.at("pattern").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    t.soils = j.at("soils").get<std::vector<SoilId>>();
    t.grid = terrain_from_json(j.at("grid"));
    t.segmentation = segmentation_from_json(j.at("segmentation"));
    return t;
  });
}

Json to_json(const TrajectoryInfo& t) {
  Json wps = Json::array();
  for (const auto& w : t.waypoints) wps.push_back({w.x, w.y});
  return Json{{"id", t.id},
              {"terrain_id", t.terrain_id},
              {"split", to_string(t.split)},
              {"commanded_speed", t.commanded_speed},
              {"waypoints", wps},
              {"termination", to_string(t.termination)},
              {"n_logged", t.n_logged},
              {"n_kept", t.n_kept}};
}

Json to_json(const UnseenSoilResult& r) {
  return Json{{"soil", r.soil},
              {"label", r.label.str()},
              {"started_prior", r.started_prior},
              {"initial_mean", r.initial_mean},
              {"initial_band", r.initial_band.index()},
              {"mae_per_refit", r.mae},
              {"test_n", r.test_n},
              {"non_increasing", r.non_increasing()}};
}

Json to_json(const BenchmarkReport& r) {
  Json terrains = Json::array();
  for (const auto& t : r.terrains) {
    Json mae = Json::object();
    for (const auto& [v, x] : t.mae) mae[to_string(v)] = x;
    terrains.push_back({{"terrain_id", t.terrain_id}, {"name", t.name}, {"n", t.n}, {"mae", mae}});
  }
  Json j{{"seed", r.seed},
         {"n_train", r.n_train},
         {"n_test", r.n_test},
         {"terrains", terrains},
         {"pipeline_wins", r.pipeline_wins},
         {"calibration",
          {{"n", r.calibration.n},
           {"within_1sigma", r.calibration.within_1sigma},
           {"within_2sigma", r.calibration.within_2sigma}}},
         {"unseen_soil", nullptr},
         {"notices", r.notices},
         {"timing", {{"runtime_s", r.runtime_s}}}};
  if (r.unseen) j["unseen_soil"] = to_json(*r.unseen);
  return j;
}

Json to_json(const SoilCurve& c) {
  Json overlay = Json::array();
  for (const auto& p : c.overlay)
    overlay.push_back({{"speed", p.speed}, {"planted", p.planted}, {"fitted", p.fitted}});
  return Json{{"soil", c.soil},
              {"name", c.name},
              {"n", c.scatter.size()},
              {"fit", to_json(c.fit)},
              {"max_deviation", c.max_deviation},
              {"overlay", overlay}};
}

std::string curve_scatter_csv(const SoilCurve& c) {
  std::string out = "speed,slip\n";
  for (const auto& p : c.scatter) out += fmt::format("{},{}\n", p.speed, p.slip);
  return out;
}

std::vector<unsigned char> encode_pgm(int width, int height, int maxval,
                                      const std::vector<int>& values) {
  if (width <= 0 || height <= 0) throw InvalidArgument("pgm: empty image");
  if (maxval < 1 || maxval > 255) throw InvalidArgument("pgm: maxval must lie in [1, 255]");
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw InvalidArgument("pgm: pixel count mismatch");
  const std::string header = fmt::format("P5\n{} {}\n{}\n", width, height, maxval);
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + values.size());
  for (int r = height - 1; r >= 0; --r)
    for (int c = 0; c < width; ++c) {
      const int v = values[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                           static_cast<std::size_t>(c)];
      if (v < 0 || v > maxval) throw InvalidArgument("pgm: pixel value out of range");
      out.push_back(static_cast<unsigned char>(v));
    }
  return out;
}

std::vector<unsigned char> terrain_pgm(const TerrainGrid& g, const SoilCatalog& catalog) {
  std::map<SoilId, int> index;
  for (std::size_t i = 0; i < catalog.size(); ++i)
    index[catalog.soils()[i].id] = static_cast<int>(i);
  std::vector<int> px;
  px.reserve(g.cells().size());
  for (SoilId id : g.cells()) {
    auto it = index.find(id);
    if (it == index.end()) throw InvalidArgument("terrain holds a soil missing from the catalog");
    px.push_back(it->second);
  }
  return encode_pgm(g.cols(), g.rows(), std::max(1, static_cast<int>(catalog.size()) - 1), px);
}

SegmentationImage segmentation_pgm(const SegmentationMap& m) {
  std::map<ClassLabel, int> index;
  for (ClassLabel l : m.cells()) index.emplace(l, 0);
  if (index.size() > 256) throw InvalidArgument("segmentation has more than 256 labels");
  int k = 0;
  SegmentationImage img;
  img.legend = Json::object();
  for (auto& [label, v] : index) {
    v = k++;
    img.legend[std::to_string(v)] = label.str();
  }
  std::vector<int> px;
  px.reserve(m.cells().size());
  for (ClassLabel l : m.cells()) px.push_back(index.at(l));
  img.pgm = encode_pgm(m.cols(), m.rows(), std::max(1, k - 1), px);
  return img;
}

std::vector<unsigned char> band_pgm(const SlipCostMap& m) {
  std::vector<int> px;
  px.reserve(m.cells.size());
  for (const auto& c : m.cells) px.push_back(c.band.index());
  return encode_pgm(m.cols, m.rows, SlipRiskBand::kCount, px);
}

Rgb jet(double slip) {
  const double x = std::clamp(std::isfinite(slip) ? slip : 0.0, 0.0, 1.0);
  auto ch = [](double v) {
    return static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  };
  return {ch(1.5 - std::abs(4.0 * x - 3.0)), ch(1.5 - std::abs(4.0 * x - 2.0)),
          ch(1.5 - std::abs(4.0 * x - 1.0))};
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_noop_flush(png_structp) {}

}  // namespace

std::vector<unsigned char> cost_map_png(const SlipCostMap& m) {
  if (m.rows <= 0 || m.cols <= 0) throw InvalidArgument("png: empty cost map");
  std::vector<unsigned char> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: cannot create info");
  }
  std::vector<unsigned char> rows(static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols) * 3);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      const Rgb px = jet(m.cell(r, c).mean);
      // Bottom-up raster: image row 0 is the top edge (largest y).
      const std::size_t o =
          (static_cast<std::size_t>(m.rows - 1 - r) * static_cast<std::size_t>(m.cols) +
           static_cast<std::size_t>(c)) * 3;
      rows[o] = px.r;
      rows[o + 1] = px.g;
      rows[o + 2] = px.b;
    }
  std::vector<png_bytep> ptrs(static_cast<std::size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r)
    ptrs[static_cast<std::size_t>(r)] =
        rows.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(m.cols) * 3;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_noop_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(m.cols), static_cast<png_uint_32>(m.rows), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace slipnet::io
