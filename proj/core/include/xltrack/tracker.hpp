#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xltrack/features.hpp"
#include "xltrack/lstm.hpp"
#include "xltrack/optimizer.hpp"

namespace xltrack {

// One training/evaluation item: a T-step feature window and the position at
// the slot right after the window.
struct SequenceSample {
  std::vector<std::vector<double>> features;  // T x F
  Position3D target;
  std::int64_t traj_id = 0;
  double snr_db = 0.0;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  Split split = Split::Train;
  InputSource source = InputSource::TrueRis;
};

struct SequenceBuildResult {
  std::vector<SequenceSample> samples;
  int skipped_trajectories = 0;  // timelines with length <= T
};

// Sliding windows per (trajectory, snr) timeline, ordered by step: features at
// slots [k, k+T-1], target = position at slot k+T. Never crosses trajectory
// boundaries; timelines shorter than T+1 are skipped and counted.
SequenceBuildResult build_sequences(const FeatureSet& fs, int t_window);

struct TrackerConfig {
  int input_dim = 0;
  int t_window = 10;
  int layers = 2;           // stacked encoder depth (>= 2; 1 = stacking-off variant)
  int hidden = 64;          // encoder hidden units per direction
  int decoder_hidden = 64;
  double dropout = 0.2;
  bool bidirectional = true;

  void validate() const;
  int encoder_out_dim() const { return bidirectional ? 2 * hidden : hidden; }
};

// Sequence-to-position autoencoder: stacked (bi)directional LSTM encoder, the
// final states of the top layer projected into the decoder's initial hidden
// state, one decoder LSTM step on a zero token, dropout, and a 3-unit head.
struct TrackerModel {
  TrackerConfig cfg;
  std::vector<nn::LstmCell> fwd;  // one per encoder layer
  std::vector<nn::LstmCell> bwd;  // empty when unidirectional
  nn::DenseLayer projection;      // encoder context -> decoder initial hidden
  nn::LstmCell decoder;
  nn::DenseLayer head;

  // Per-dimension input standardization, estimated on the training set.
  std::vector<double> feat_mean, feat_std;

  TrackerModel() = default;
  TrackerModel(const TrackerConfig& cfg, Rng& rng);

  std::vector<nn::Parameter*> parameters();
};

// Batched forward pieces. `steps` holds T Variables of shape (B, F); dropout
// draws come from `rng` in train mode only.
nn::Variable encoder_forward(const std::vector<nn::Variable>& steps, TrackerModel& model,
                             nn::Mode mode, Rng& rng);
nn::Variable decoder_forward(const nn::Variable& context, TrackerModel& model,
                             nn::Mode mode, Rng& rng);
nn::Variable tracker_forward(const std::vector<nn::Variable>& steps, TrackerModel& model,
                             nn::Mode mode, Rng& rng);

// Standardizes a batch of samples with the model's stored stats and packs them
// into T step tensors of shape (B, F) plus a (B, 3) target tensor.
struct PackedBatch {
  std::vector<nn::Variable> steps;
  nn::Tensor targets;
};
PackedBatch pack_batch(const TrackerModel& model,
                       const std::vector<const SequenceSample*>& batch);

struct TrackerHyper {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct TrackerLossCurve {
  // Entry 0 is the pre-training evaluation; entry e >= 1 follows epoch e.
  std::vector<double> train;
  std::vector<double> val;
};

struct TrackerTrainResult {
  TrackerModel model;
  TrackerLossCurve curve;
};

// Minimizes the mean squared Euclidean position error (m^2) with Adam. Loss
// curves record that same quantity. Throws NumericError if the loss turns
// non-finite, ConfigError on empty sets.
TrackerTrainResult train_tracker(const std::vector<SequenceSample>& train,
                                 const std::vector<SequenceSample>& val,
                                 const TrackerConfig& cfg, const TrackerHyper& hyper);

// Mean squared Euclidean error over a set of samples, grouped.
struct MseGroup {
  double snr_db = 0.0;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  InputSource source = InputSource::TrueRis;
  double mse_m2 = 0.0;
  std::int64_t n_samples = 0;
};

std::vector<MseGroup> evaluate(TrackerModel& model,
                               const std::vector<SequenceSample>& samples,
                               int batch_size = 64);

void save_tracker(const TrackerModel& model, const std::string& path);
TrackerModel load_tracker(const std::string& path);

// First epoch e (>= 1) from which the val loss stays within `tolerance`
// relative change across a `window`-epoch span; returns -1 if never reached.
int plateau_epoch(const std::vector<double>& val_losses, int window, double tolerance);

}  // namespace xltrack
