#include "xltrack/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "xltrack/errors.hpp"

namespace xltrack {

using nlohmann::json;

Stage stage_from_string(const std::string& s) {
  if (s == "generate") return Stage::Generate;
  if (s == "train-recon") return Stage::TrainRecon;
  if (s == "extract-features") return Stage::ExtractFeatures;
  if (s == "train-tracker") return Stage::TrainTracker;
  if (s == "evaluate") return Stage::Evaluate;
  throw ConfigError("unknown stage '" + s +
                    "' (expected generate|train-recon|extract-features|train-tracker|evaluate)");
}

std::string stage_to_string(Stage s) {
  switch (s) {
    case Stage::Generate: return "generate";
    case Stage::TrainRecon: return "train-recon";
    case Stage::ExtractFeatures: return "extract-features";
    case Stage::TrainTracker: return "train-tracker";
    case Stage::Evaluate: return "evaluate";
  }
  throw DomainError("unhandled stage");
}

std::vector<Stage> all_stages() {
  return {Stage::Generate, Stage::TrainRecon, Stage::ExtractFeatures, Stage::TrainTracker,
          Stage::Evaluate};
}

ScenarioGeometry GeometryConfig::build() const {
  const double wavelength = carrier_wavelength(carrier_ghz * 1e9);
  return build_geometry(n1, n2, m1, m2, spacing_wavelengths * wavelength, ris_center,
                        bs_center, ris_normal, bs_normal, wavelength);
}

namespace {

json position_to_json(const Position3D& p) { return json::array({p.x, p.y, p.z}); }

Position3D position_from_json(const json& j, const std::string& key,
                              std::vector<std::string>& issues) {
  if (!j.is_array() || j.size() != 3 ||
      !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
    issues.push_back(key + " must be an array of three numbers");
    return {};
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Field-level access that records problems instead of throwing, so a config
// with several mistakes reports all of them in one pass.
class BlockReader {
 public:
  // Takes the block by value: callers hand in a temporary from block_or_empty,
  // and a reference member would dangle once that full expression ends.
  BlockReader(json block, std::string prefix, std::vector<std::string>& issues)
      : block_(std::move(block)), prefix_(std::move(prefix)), issues_(issues) {}

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    auto it = block_.find(key);
    if (it == block_.end()) return;  // optional: default stays
    try {
      target = it->get<T>();
    } catch (const json::exception&) {
      issues_.push_back(prefix_ + key + " has the wrong type");
    }
  }

  void get_position(const char* key, Position3D& target) {
    seen_.insert(key);
    auto it = block_.find(key);
    if (it == block_.end()) return;
    target = position_from_json(*it, prefix_ + key, issues_);
  }

  template <typename T, typename Fn>
  void get_parsed(const char* key, T& target, Fn parse) {
    std::string raw;
    bool present = block_.contains(key);
    get(key, raw);
    if (!present || raw.empty()) return;
    try {
      target = parse(raw);
    } catch (const Error& e) {
      issues_.push_back(prefix_ + key + ": " + e.what());
    }
  }

  template <typename T, typename Fn>
  void get_parsed_list(const char* key, std::vector<T>& target, Fn parse) {
    seen_.insert(key);
    auto it = block_.find(key);
    if (it == block_.end()) return;
    if (!it->is_array()) {
      issues_.push_back(prefix_ + key + " must be an array of strings");
      return;
    }
    std::vector<T> out;
    for (const json& v : *it) {
      if (!v.is_string()) {
        issues_.push_back(prefix_ + key + " must be an array of strings");
        return;
      }
      try {
        out.push_back(parse(v.get<std::string>()));
      } catch (const Error& e) {
        issues_.push_back(prefix_ + key + ": " + e.what());
        return;
      }
    }
    target = std::move(out);
  }

  void finish() {
    for (auto it = block_.begin(); it != block_.end(); ++it) {
      if (!seen_.count(it.key())) issues_.push_back(prefix_ + it.key() + " is not a known field");
    }
  }

 private:
  json block_;
  std::string prefix_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

json block_or_empty(const json& root, const char* key, std::vector<std::string>& issues,
                    std::set<std::string>& seen) {
  seen.insert(key);
  auto it = root.find(key);
  if (it == root.end()) return json::object();
  if (!it->is_object()) {
    issues.push_back(std::string(key) + " must be an object");
    return json::object();
  }
  return *it;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");

  ExperimentConfig cfg;
  std::vector<std::string> issues;
  std::set<std::string> seen_top;

  {
    BlockReader r(block_or_empty(root, "geometry", issues, seen_top), "geometry.", issues);
    r.get("n1", cfg.geometry.n1);
    r.get("n2", cfg.geometry.n2);
    r.get("m1", cfg.geometry.m1);
    r.get("m2", cfg.geometry.m2);
    r.get("spacing_wavelengths", cfg.geometry.spacing_wavelengths);
    r.get("carrier_ghz", cfg.geometry.carrier_ghz);
    r.get_position("ris_center", cfg.geometry.ris_center);
    r.get_position("bs_center", cfg.geometry.bs_center);
    r.get_parsed("ris_normal", cfg.geometry.ris_normal,
                 [](const std::string& s) { return axis_from_string(s); });
    r.get_parsed("bs_normal", cfg.geometry.bs_normal,
                 [](const std::string& s) { return axis_from_string(s); });
    double br = cfg.geometry.beta.real(), bi = cfg.geometry.beta.imag();
    r.get("beta_real", br);
    r.get("beta_imag", bi);
    cfg.geometry.beta = cxd{br, bi};
    r.finish();
  }
  {
    BlockReader r(block_or_empty(root, "scenario", issues, seen_top), "scenario.", issues);
    r.get("n_scatterers", cfg.scenario.n_scatterers);
    r.get("los_power", cfg.scenario.los_power);
    r.get("scatter_power_ratio", cfg.scenario.scatter_power_ratio);
    r.get("omega_random", cfg.scenario.omega_random);
    r.get("ris_noise", cfg.scenario.ris_noise);
    r.get("transmit_power_dbm", cfg.scenario.transmit_power_dbm);
    r.finish();
  }
  {
    BlockReader r(block_or_empty(root, "trajectories", issues, seen_top), "trajectories.",
                  issues);
    r.get_parsed_list("kinds", cfg.trajectories.kinds,
                      [](const std::string& s) { return trajectory_kind_from_string(s); });
    r.get("count", cfg.trajectories.count);
    r.get("steps", cfg.trajectories.steps);
    std::vector<double> bounds{cfg.trajectories.bounds.x_max, cfg.trajectories.bounds.y_max,
                               cfg.trajectories.bounds.z_max};
    r.get("bounds", bounds);
    if (bounds.size() == 3) {
      cfg.trajectories.bounds = WorkspaceBounds{bounds[0], bounds[1], bounds[2]};
    } else {
      issues.push_back("trajectories.bounds must hold exactly three numbers");
    }
    r.get("wave_amplitude", cfg.trajectories.wave_amplitude);
    r.get("wave_wavelength", cfg.trajectories.wave_wavelength);
    r.get("wave_span", cfg.trajectories.wave_span);
    r.get("spiral_a", cfg.trajectories.spiral_a);
    r.get("spiral_b", cfg.trajectories.spiral_b);
    r.get("spiral_dtheta", cfg.trajectories.spiral_dtheta);
    r.get("split_fraction", cfg.trajectories.split_fraction);
    r.finish();
  }
  {
    seen_top.insert("snr_grid_db");
    if (root.contains("snr_grid_db")) {
      try {
        cfg.snr_grid_db = root["snr_grid_db"].get<std::vector<double>>();
      } catch (const json::exception&) {
        issues.push_back("snr_grid_db must be an array of numbers");
      }
    }
  }
  {
    BlockReader r(block_or_empty(root, "recon", issues, seen_top), "recon.", issues);
    r.get("upsample_h", cfg.recon.upsample_h);
    r.get("upsample_w", cfg.recon.upsample_w);
    r.get("modules", cfg.recon.n_dense_modules);
    r.get("blocks_per_module", cfg.recon.blocks_per_module);
    r.get("growth_channels", cfg.recon.growth_channels);
    r.get("initial_channels", cfg.recon.initial_channels);
    r.get("upsample_mode", cfg.recon.upsample_mode);
    r.get("epochs", cfg.recon.epochs);
    r.get("batch_size", cfg.recon.batch_size);
    r.get("lr", cfg.recon.lr);
    r.get_parsed("train_kind", cfg.recon.train_kind,
                 [](const std::string& s) { return trajectory_kind_from_string(s); });
    r.get("train_snr_db", cfg.recon.train_snr_db);
    r.get("max_train_records", cfg.recon.max_train_records);
    r.get("max_val_records", cfg.recon.max_val_records);
    r.finish();
  }
  {
    BlockReader r(block_or_empty(root, "features", issues, seen_top), "features.", issues);
    r.get("n_f", cfg.features.n_f);
    r.get("cnn_filters1", cfg.features.cnn_filters1);
    r.get("cnn_filters2", cfg.features.cnn_filters2);
    r.get("cnn_kernel", cfg.features.cnn_kernel);
    r.get("cnn_pool", cfg.features.cnn_pool);
    r.get("aoa_enabled", cfg.features.aoa_enabled);
    r.get("k_rows", cfg.features.k_rows);
    r.get("k_cols", cfg.features.k_cols);
    r.get("grid_step_deg", cfg.features.grid_step_deg);
    r.get("n_sources", cfg.features.n_sources);
    r.get("snapshots", cfg.features.snapshots);
    r.get("preprocess", cfg.features.preprocess);
    r.get_parsed_list("sources", cfg.features.sources,
                      [](const std::string& s) { return source_from_string(s); });
    r.finish();
  }
  {
    const json tb = block_or_empty(root, "tracker", issues, seen_top);
    BlockReader r(tb, "tracker.", issues);
    r.get("t_window", cfg.tracker.t_window);
    r.get("layers", cfg.tracker.layers);
    r.get("hidden", cfg.tracker.hidden);
    r.get("decoder_hidden", cfg.tracker.decoder_hidden);
    r.get("dropout", cfg.tracker.dropout);
    r.get("epochs", cfg.tracker.epochs);
    r.get("batch_size", cfg.tracker.batch_size);
    r.get("lr", cfg.tracker.lr);
    {
      json ab = json::object();
      if (tb.contains("ablation")) {
        if (tb["ablation"].is_object()) {
          ab = tb["ablation"];
        } else {
          issues.push_back("tracker.ablation must be an object");
        }
      }
      BlockReader ra(ab, "tracker.ablation.", issues);
      ra.get("variants", cfg.tracker.ablation.variants);
      ra.get_parsed_list("kinds", cfg.tracker.ablation.kinds,
                         [](const std::string& s) { return trajectory_kind_from_string(s); });
      ra.get_parsed_list("sources", cfg.tracker.ablation.sources,
                         [](const std::string& s) { return source_from_string(s); });
      ra.finish();
    }
    // "ablation" handled above; BlockReader::finish would flag it otherwise.
    for (auto it = tb.begin(); it != tb.end(); ++it) {
      static const std::set<std::string> known{"t_window", "layers", "hidden",
                                              "decoder_hidden", "dropout", "epochs",
                                              "batch_size", "lr", "ablation"};
      if (!known.count(it.key()))
        issues.push_back("tracker." + it.key() + " is not a known field");
    }
  }
  {
    BlockReader r(block_or_empty(root, "execution", issues, seen_top), "execution.", issues);
    r.get("master_seed", cfg.execution.master_seed);
    r.get_parsed_list("stages", cfg.execution.stages,
                      [](const std::string& s) { return stage_from_string(s); });
    r.finish();
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "tracker") continue;
    if (!seen_top.count(it.key()))
      issues.push_back(it.key() + " is not a known top-level block");
  }
  if (!issues.empty()) throw ConfigError(issues);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["geometry"] = {{"n1", c.geometry.n1},
                   {"n2", c.geometry.n2},
                   {"m1", c.geometry.m1},
                   {"m2", c.geometry.m2},
                   {"spacing_wavelengths", c.geometry.spacing_wavelengths},
                   {"carrier_ghz", c.geometry.carrier_ghz},
                   {"ris_center", position_to_json(c.geometry.ris_center)},
                   {"bs_center", position_to_json(c.geometry.bs_center)},
                   {"ris_normal", axis_to_string(c.geometry.ris_normal)},
                   {"bs_normal", axis_to_string(c.geometry.bs_normal)},
                   {"beta_real", c.geometry.beta.real()},
                   {"beta_imag", c.geometry.beta.imag()}};
  j["scenario"] = {{"n_scatterers", c.scenario.n_scatterers},
                   {"los_power", c.scenario.los_power},
                   {"scatter_power_ratio", c.scenario.scatter_power_ratio},
                   {"omega_random", c.scenario.omega_random},
                   {"ris_noise", c.scenario.ris_noise},
                   {"transmit_power_dbm", c.scenario.transmit_power_dbm}};
  json kinds = json::array();
  for (auto k : c.trajectories.kinds) kinds.push_back(trajectory_kind_to_string(k));
  j["trajectories"] = {
      {"kinds", kinds},
      {"count", c.trajectories.count},
      {"steps", c.trajectories.steps},
      {"bounds", json::array({c.trajectories.bounds.x_max, c.trajectories.bounds.y_max,
                              c.trajectories.bounds.z_max})},
      {"wave_amplitude", c.trajectories.wave_amplitude},
      {"wave_wavelength", c.trajectories.wave_wavelength},
      {"wave_span", c.trajectories.wave_span},
      {"spiral_a", c.trajectories.spiral_a},
      {"spiral_b", c.trajectories.spiral_b},
      {"spiral_dtheta", c.trajectories.spiral_dtheta},
      {"split_fraction", c.trajectories.split_fraction}};
  j["snr_grid_db"] = c.snr_grid_db;
  j["recon"] = {{"upsample_h", c.recon.upsample_h},
                {"upsample_w", c.recon.upsample_w},
                {"modules", c.recon.n_dense_modules},
                {"blocks_per_module", c.recon.blocks_per_module},
                {"growth_channels", c.recon.growth_channels},
                {"initial_channels", c.recon.initial_channels},
                {"upsample_mode", c.recon.upsample_mode},
                {"epochs", c.recon.epochs},
                {"batch_size", c.recon.batch_size},
                {"lr", c.recon.lr},
                {"train_kind", trajectory_kind_to_string(c.recon.train_kind)},
                {"train_snr_db", c.recon.train_snr_db},
                {"max_train_records", c.recon.max_train_records},
                {"max_val_records", c.recon.max_val_records}};
  json sources = json::array();
  for (auto s : c.features.sources) sources.push_back(source_to_string(s));
  j["features"] = {{"n_f", c.features.n_f},
                   {"cnn_filters1", c.features.cnn_filters1},
                   {"cnn_filters2", c.features.cnn_filters2},
                   {"cnn_kernel", c.features.cnn_kernel},
                   {"cnn_pool", c.features.cnn_pool},
                   {"aoa_enabled", c.features.aoa_enabled},
                   {"k_rows", c.features.k_rows},
                   {"k_cols", c.features.k_cols},
                   {"grid_step_deg", c.features.grid_step_deg},
                   {"n_sources", c.features.n_sources},
                   {"snapshots", c.features.snapshots},
                   {"preprocess", c.features.preprocess},
                   {"sources", sources}};
  json abl_kinds = json::array();
  for (auto k : c.tracker.ablation.kinds) abl_kinds.push_back(trajectory_kind_to_string(k));
  json abl_sources = json::array();
  for (auto s : c.tracker.ablation.sources) abl_sources.push_back(source_to_string(s));
  j["tracker"] = {{"t_window", c.tracker.t_window},
                  {"layers", c.tracker.layers},
                  {"hidden", c.tracker.hidden},
                  {"decoder_hidden", c.tracker.decoder_hidden},
                  {"dropout", c.tracker.dropout},
                  {"epochs", c.tracker.epochs},
                  {"batch_size", c.tracker.batch_size},
                  {"lr", c.tracker.lr},
                  {"ablation",
                   {{"variants", c.tracker.ablation.variants},
                    {"kinds", abl_kinds},
                    {"sources", abl_sources}}}};
  json stages = json::array();
  for (auto s : c.execution.stages) stages.push_back(stage_to_string(s));
  j["execution"] = {{"master_seed", c.execution.master_seed}, {"stages", stages}};
  return j;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

std::string ExperimentConfig::hash() const {
  json j = config_to_json(*this);
  // The stage list selects what runs, not what the experiment is.
  j["execution"].erase("stages");
  const std::uint64_t h = fnv1a64(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> issues;
  auto absorb = [&issues](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) issues.push_back(i);
    } catch (const Error& e) {
      issues.push_back(e.what());
    }
  };

  if (geometry.n1 <= 0 || geometry.n2 <= 0 || geometry.m1 <= 0 || geometry.m2 <= 0)
    issues.push_back("geometry grid dimensions must be positive");
  if (!(geometry.spacing_wavelengths > 0.0))
    issues.push_back("geometry.spacing_wavelengths must be positive");
  if (!(geometry.carrier_ghz > 0.0)) issues.push_back("geometry.carrier_ghz must be positive");

  if (trajectories.kinds.empty()) issues.push_back("trajectories.kinds must not be empty");
  {
    std::set<int> uniq;
    for (auto k : trajectories.kinds) {
      if (!uniq.insert(static_cast<int>(k)).second)
        issues.push_back("trajectories.kinds lists " + trajectory_kind_to_string(k) + " twice");
    }
  }
  if (snr_grid_db.empty()) issues.push_back("snr_grid_db must not be empty");
  if (features.sources.empty()) issues.push_back("features.sources must not be empty");

  const bool wants_recon =
      std::find(features.sources.begin(), features.sources.end(), InputSource::ReconRis) !=
      features.sources.end();
  if (wants_recon &&
      std::find(trajectories.kinds.begin(), trajectories.kinds.end(), recon.train_kind) ==
          trajectories.kinds.end()) {
    issues.push_back("recon.train_kind must be one of trajectories.kinds");
  }
  if (wants_recon &&
      std::find(snr_grid_db.begin(), snr_grid_db.end(), recon.train_snr_db) ==
          snr_grid_db.end()) {
    issues.push_back("recon.train_snr_db must be one of the snr_grid_db points");
  }
  if (recon.upsample_mode != "bilinear" && recon.upsample_mode != "nearest")
    issues.push_back("recon.upsample_mode must be 'bilinear' or 'nearest'");
  if (recon.epochs < 0 || recon.batch_size < 1 || recon.max_train_records < 1 ||
      recon.max_val_records < 1)
    issues.push_back("recon training sizes must be positive (epochs may be zero)");

  for (const auto& v : tracker.ablation.variants) {
    if (v != "stacked_lstm" && v != "lstm")
      issues.push_back("tracker.ablation.variants entries must be 'stacked_lstm' or 'lstm'");
  }
  for (auto k : tracker.ablation.kinds) {
    if (std::find(trajectories.kinds.begin(), trajectories.kinds.end(), k) ==
        trajectories.kinds.end())
      issues.push_back("tracker.ablation.kinds must be a subset of trajectories.kinds");
  }
  for (auto s : tracker.ablation.sources) {
    if (std::find(features.sources.begin(), features.sources.end(), s) ==
        features.sources.end())
      issues.push_back("tracker.ablation.sources must be a subset of features.sources");
  }
  if (!tracker.ablation.variants.empty() &&
      (tracker.ablation.kinds.empty() || tracker.ablation.sources.empty()))
    issues.push_back("tracker.ablation needs kinds and sources when variants are requested");
  if (tracker.layers < 2) issues.push_back("tracker.layers must be at least 2 (the "
                                           "single-layer form exists only as an ablation)");

  absorb([&] { (void)generation_params(trajectories.kinds.front()).validate(); });
  absorb([&] { recon_config().validate(); });
  absorb([&] {
    CnnConfig c;
    c.in_h = geometry.n1;
    c.in_w = geometry.n2;
    c.filters1 = features.cnn_filters1;
    c.filters2 = features.cnn_filters2;
    c.kernel = features.cnn_kernel;
    c.pool = features.cnn_pool;
    c.n_f = features.n_f;
    c.validate();
  });
  absorb([&] {
    CnnConfig c;
    c.in_h = geometry.m1;
    c.in_w = geometry.m2;
    c.filters1 = features.cnn_filters1;
    c.filters2 = features.cnn_filters2;
    c.kernel = features.cnn_kernel;
    c.pool = features.cnn_pool;
    c.n_f = features.n_f;
    c.validate();
  });
  if (features.aoa_enabled) {
    absorb([&] {
      (void)partition_subarrays(geometry.n1, geometry.n2, features.k_rows, features.k_cols);
      (void)make_angle_grid(features.grid_step_deg);
      if (features.snapshots < 2) throw ConfigError("features.snapshots must be at least 2");
      const int p = (geometry.n1 / features.k_rows) * (geometry.n2 / features.k_cols);
      if (features.n_sources < 1 || features.n_sources >= p)
        throw ConfigError("features.n_sources must lie in [1, tile size - 1]");
    });
  }
  absorb([&] { tracker_config(1, "full").validate(); });
  if (!issues.empty()) throw ConfigError(issues);
}

GenerationParams ExperimentConfig::generation_params(TrajectoryKind kind) const {
  GenerationParams p;
  p.kind = kind;
  p.count = trajectories.count;
  p.steps = trajectories.steps;
  p.snr_grid_db = snr_grid_db;
  p.bounds = trajectories.bounds;
  p.wave_amplitude = trajectories.wave_amplitude;
  p.wave_wavelength = trajectories.wave_wavelength;
  p.wave_span = trajectories.wave_span;
  p.spiral_a = trajectories.spiral_a;
  p.spiral_b = trajectories.spiral_b;
  p.spiral_dtheta = trajectories.spiral_dtheta;
  p.n_scatterers = scenario.n_scatterers;
  p.los_power = scenario.los_power;
  p.scatter_power_ratio = scenario.scatter_power_ratio;
  p.omega_random = scenario.omega_random;
  p.transmit_power_dbm = scenario.transmit_power_dbm;
  p.beta = geometry.beta;
  p.ris_noise = scenario.ris_noise;
  p.split_fraction = trajectories.split_fraction;
  p.master_seed = execution.master_seed;
  return p;
}

ReconConfig ExperimentConfig::recon_config() const {
  ReconConfig c;
  c.m1 = geometry.m1;
  c.m2 = geometry.m2;
  c.n1 = geometry.n1;
  c.n2 = geometry.n2;
  c.upsample_h = recon.upsample_h;
  c.upsample_w = recon.upsample_w;
  c.n_dense_modules = recon.n_dense_modules;
  c.blocks_per_module = recon.blocks_per_module;
  c.growth_channels = recon.growth_channels;
  c.initial_channels = recon.initial_channels;
  c.upsample_mode = recon.upsample_mode == "nearest" ? nn::UpsampleMode::Nearest
                                                     : nn::UpsampleMode::Bilinear;
  return c;
}

ReconHyper ExperimentConfig::recon_hyper() const {
  ReconHyper h;
  h.epochs = recon.epochs;
  h.batch_size = recon.batch_size;
  h.learning_rate = recon.lr;
  h.seed = derive_seed(execution.master_seed, "stage:recon", 0);
  return h;
}

FeatureParams ExperimentConfig::feature_params() const {
  FeatureParams p;
  p.cnn.filters1 = features.cnn_filters1;
  p.cnn.filters2 = features.cnn_filters2;
  p.cnn.kernel = features.cnn_kernel;
  p.cnn.pool = features.cnn_pool;
  p.cnn.n_f = features.n_f;
  p.aoa.k_rows = features.k_rows;
  p.aoa.k_cols = features.k_cols;
  p.aoa.grid_step_deg = features.grid_step_deg;
  p.aoa.n_sources = features.n_sources;
  p.aoa.snapshots = features.snapshots;
  p.aoa.preprocess = features.preprocess;
  p.aoa_enabled = features.aoa_enabled;
  return p;
}

TrackerConfig ExperimentConfig::tracker_config(int feature_dim,
                                               const std::string& variant) const {
  TrackerConfig c;
  c.input_dim = feature_dim;
  c.t_window = tracker.t_window;
  c.layers = tracker.layers;
  c.hidden = tracker.hidden;
  c.decoder_hidden = tracker.decoder_hidden;
  c.dropout = tracker.dropout;
  c.bidirectional = true;
  if (variant == "full") {
    // defaults above
  } else if (variant == "stacked_lstm") {
    c.bidirectional = false;
  } else if (variant == "lstm") {
    c.bidirectional = false;
    c.layers = 1;
  } else {
    throw ConfigError("unknown tracker variant '" + variant +
                      "' (expected full|stacked_lstm|lstm)");
  }
  return c;
}

TrackerHyper ExperimentConfig::tracker_hyper(const std::string& label) const {
  TrackerHyper h;
  h.epochs = tracker.epochs;
  h.batch_size = tracker.batch_size;
  h.lr = tracker.lr;
  h.seed = derive_seed(execution.master_seed, "stage:" + label, 0);
  return h;
}

}  // namespace xltrack
