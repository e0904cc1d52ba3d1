#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xltrack/aoa.hpp"
#include "xltrack/dataset.hpp"
#include "xltrack/features.hpp"
#include "xltrack/reconstruction.hpp"
#include "xltrack/tracker.hpp"

namespace xltrack {

// Pipeline stages in dependency order.
enum class Stage { Generate, TrainRecon, ExtractFeatures, TrainTracker, Evaluate };

Stage stage_from_string(const std::string& s);
std::string stage_to_string(Stage s);
std::vector<Stage> all_stages();

struct GeometryConfig {
  int n1 = 10, n2 = 10;
  int m1 = 4, m2 = 4;
  double spacing_wavelengths = 0.5;
  double carrier_ghz = 28.0;
  Position3D ris_center{6.0, 0.0, 2.0};
  Position3D bs_center{0.0, 5.0, 1.5};
  Axis ris_normal = Axis::Y;
  Axis bs_normal = Axis::X;
  cxd beta{1.0, 0.0};

  ScenarioGeometry build() const;
};

struct ScenarioConfig {
  int n_scatterers = 9;
  double los_power = 1.0;
  double scatter_power_ratio = 0.1;
  bool omega_random = false;
  bool ris_noise = false;
  double transmit_power_dbm = 30.0;
};

struct TrajectoryBlock {
  std::vector<TrajectoryKind> kinds{TrajectoryKind::RandomWalk, TrajectoryKind::Wave,
                                    TrajectoryKind::Spiral};
  int count = 500;
  int steps = 11;
  WorkspaceBounds bounds{10.0, 10.0, 3.0};
  double wave_amplitude = 2.0;
  double wave_wavelength = 5.0;
  double wave_span = 6.0;
  double spiral_a = 0.1;
  double spiral_b = 3.0;
  double spiral_dtheta = 0.09817477042468103;  // keeps the default turn inside the box
  double split_fraction = 0.8;
};

struct ReconBlock {
  int upsample_h = 32, upsample_w = 32;
  int n_dense_modules = 2;
  int blocks_per_module = 3;
  int growth_channels = 8;
  int initial_channels = 3;
  std::string upsample_mode = "bilinear";  // or "nearest"
  int epochs = 8;
  int batch_size = 16;
  double lr = 1e-3;
  TrajectoryKind train_kind = TrajectoryKind::RandomWalk;
  double train_snr_db = 20.0;
  int max_train_records = 2200;
  int max_val_records = 600;
};

struct FeatureBlock {
  int n_f = 32;
  int cnn_filters1 = 16, cnn_filters2 = 32;
  int cnn_kernel = 3, cnn_pool = 2;
  bool aoa_enabled = true;
  int k_rows = 2, k_cols = 2;
  double grid_step_deg = 1.0;
  int n_sources = 1;
  int snapshots = 64;
  bool preprocess = true;
  std::vector<InputSource> sources{InputSource::Bs, InputSource::TrueRis,
                                   InputSource::ReconRis};
};

struct AblationBlock {
  // Trained alongside the full model on matching data; "stacked_lstm" drops
  // bidirectionality, "lstm" additionally drops stacking.
  std::vector<std::string> variants;
  std::vector<TrajectoryKind> kinds;
  std::vector<InputSource> sources;
};

struct TrackerBlock {
  int t_window = 10;
  int layers = 2;
  int hidden = 64;
  int decoder_hidden = 64;
  double dropout = 0.2;
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  AblationBlock ablation;
};

struct ExecutionBlock {
  std::uint64_t master_seed = 1;
  std::vector<Stage> stages = all_stages();
};

struct ExperimentConfig {
  GeometryConfig geometry;
  ScenarioConfig scenario;
  TrajectoryBlock trajectories;
  std::vector<double> snr_grid_db{0.0, 10.0, 20.0};
  ReconBlock recon;
  FeatureBlock features;
  TrackerBlock tracker;
  ExecutionBlock execution;

  // Throws ConfigError listing every problem at once.
  void validate() const;

  // 16-hex-digit digest over the canonical serialized form, stage list
  // excluded: the hash names the experiment, not which part of it ran.
  std::string hash() const;

  GenerationParams generation_params(TrajectoryKind kind) const;
  ReconConfig recon_config() const;
  ReconHyper recon_hyper() const;
  FeatureParams feature_params() const;
  TrackerConfig tracker_config(int feature_dim, const std::string& variant) const;
  TrackerHyper tracker_hyper(const std::string& label) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical, sorted keys

}  // namespace xltrack
