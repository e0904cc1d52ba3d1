#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xltrack/aoa.hpp"
#include "xltrack/dataset.hpp"
#include "xltrack/signal_features.hpp"

namespace xltrack {

// Which observation feeds the feature stack for a record.
enum class InputSource { Bs, TrueRis, ReconRis };

InputSource source_from_string(const std::string& s);
std::string source_to_string(InputSource s);

struct FeatureRecord {
  std::int64_t traj_id = 0;
  int step = 0;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  Split split = Split::Train;
  double snr_db = 0.0;
  Position3D position;
  std::vector<double> features;
};

struct FeatureSet {
  InputSource source = InputSource::TrueRis;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  int cnn_length = 0;
  int tf_length = 0;
  int aoa_length = 0;  // 0 for the BS source (no angle search at the array)
  std::vector<FeatureRecord> records;

  int feature_length() const { return cnn_length + tf_length + aoa_length; }
};

struct FeatureParams {
  // Spatial dims are filled per source from the geometry; the rest is shared
  // so BS-side and RIS-side features stay architecturally comparable.
  CnnConfig cnn;
  AoaConfig aoa;
  bool aoa_enabled = true;  // applies to the RIS-side sources only
};

// Runs the per-record feature stack over a dataset. CNN weights are drawn from
// seeds derived off the master seed (one chain per input grid, so the true and
// reconstructed RIS signals share the exact same projector) and per-record
// noise uses an independent derived stream, making the output reproducible
// bit-for-bit. `recon_signals`, aligned with ds.records, must be provided for
// the ReconRis source.
FeatureSet extract_features(const Dataset& ds, InputSource source,
                            const FeatureParams& params,
                            const std::vector<std::vector<cxd>>* recon_signals = nullptr);

// Extractor weights for the given source, reproducible from the dataset's
// master seed; used both for extraction and for persisting the projector.
CnnExtractor make_cnn_extractor(const Dataset& ds, InputSource source,
                                const FeatureParams& params);

// Directory layout mirrors the dataset store: manifest.txt + records.bin.
void save_features(const FeatureSet& fs, const std::string& dir);
FeatureSet load_features(const std::string& dir);

}  // namespace xltrack
