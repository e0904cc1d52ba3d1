#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xltrack/channel.hpp"
#include "xltrack/trajectory.hpp"

namespace xltrack {

enum class Split { Train, Test };

// One pilot slot at one SNR point: MU position plus the paired signals.
struct SlotRecord {
  std::int64_t traj_id = 0;
  int step = 0;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  Split split = Split::Train;
  double snr_db = 0.0;
  Position3D position;
  std::vector<cxd> y;    // BS observation, length M
  std::vector<cxd> y_r;  // RIS-side signal, length N
};

struct GenerationParams {
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  int count = 1;
  int steps = 11;
  std::vector<double> snr_grid_db;
  WorkspaceBounds bounds{10.0, 10.0, 3.0};

  double wave_amplitude = 2.0;
  double wave_wavelength = 5.0;
  double wave_span = 6.0;
  double spiral_a = 0.1;
  double spiral_b = 3.0;
  double spiral_dtheta = 0.62831853071795862;  // pi/5

  int n_scatterers = 9;
  double los_power = 1.0;
  double scatter_power_ratio = 0.1;
  bool omega_random = false;
  double transmit_power_dbm = 30.0;
  cxd beta{1.0, 0.0};
  bool ris_noise = false;

  double split_fraction = 0.8;  // train share, by whole trajectories
  std::uint64_t master_seed = 1;

  void validate() const;
};

struct Dataset {
  GenerationParams params;
  ScenarioGeometry geometry;
  PhaseProfile omega;
  std::vector<SlotRecord> records;
  std::int64_t fresnel_warnings = 0;

  int train_trajectories() const;
};

// Generates `count` trajectories of the requested kind and, for every step and
// every SNR point, one uplink slot. Noise variance per record is set from the
// clean BS signal power so the configured SNR holds at the BS array:
//   noise_variance = ||H*diag(omega)*h*s||^2 / (M * 10^(snr_db/10)).
// Fully deterministic: one derived child seed per trajectory index, one for the
// scatterer draw, one for the phase profile.
Dataset generate_dataset(const GenerationParams& params,
                         const ScenarioGeometry& geom);

// Directory layout: <dir>/manifest.txt (plain-text key = value lines) plus
// <dir>/records.bin (little-endian 64-bit floats, (re, im) interleaved).
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Manifest access for tools that only need metadata.
std::map<std::string, std::string> read_manifest(const std::string& path);

}  // namespace xltrack
