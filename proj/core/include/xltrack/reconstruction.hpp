#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xltrack/channel.hpp"
#include "xltrack/dataset.hpp"
#include "xltrack/layers.hpp"

namespace xltrack {

// Network that maps the BS observation y (length M) to an estimate of the
// RIS-side signal y_r (length N): image-style preprocessing, a 1x1 conv to
// three channels, densely-connected conv modules with transitions, and an
// affine head emitting 2N reals.
struct ReconConfig {
  int m1 = 4, m2 = 4;    // BS grid feeding the input tensor
  int n1 = 10, n2 = 10;  // RIS grid defining the output length
  int upsample_h = 32, upsample_w = 32;
  int n_dense_modules = 2;
  int blocks_per_module = 3;
  int growth_channels = 8;
  int initial_channels = 3;  // after the tri-channel conv
  nn::UpsampleMode upsample_mode = nn::UpsampleMode::Bilinear;

  int input_length() const { return m1 * m2; }
  int output_length() const { return 2 * n1 * n2; }
  void validate() const;
};

// 2 x h x w tensor from a length-M complex signal: channel 0 = real parts
// reshaped to m1 x m2, channel 1 = imaginary parts, then upsampled.
nn::Tensor preprocess_bs(const std::vector<cxd>& y, int m1, int m2, int target_h,
                         int target_w,
                         nn::UpsampleMode mode = nn::UpsampleMode::Bilinear);

struct ReconDenseBlock {
  nn::BatchNormLayer bn;
  nn::Conv2dLayer conv;  // 3x3, padding 1, growth_channels outputs
};

struct ReconTransition {
  nn::Conv2dLayer conv;  // 1x1, halves the channel count (floor)
};

struct ReconModel {
  ReconConfig cfg;
  nn::Conv2dLayer tri;  // 1x1, 2 -> initial_channels
  std::vector<std::vector<ReconDenseBlock>> modules;
  std::vector<ReconTransition> transitions;  // one after every module
  nn::DenseLayer head;                       // flattened features -> 2N
  // Per-component standardization of the training targets; the head learns in
  // standardized space and inference undoes the transform.
  nn::Tensor target_mean, target_std;

  ReconModel() = default;
  ReconModel(const ReconConfig& cfg, Rng& rng);

  std::vector<nn::Parameter*> parameters();
  int head_input_length() const;
};

// One dense block: concat(input, conv3x3(relu(batchnorm(input)))).
nn::Variable dense_block_forward(const nn::Variable& t, ReconDenseBlock& block,
                                 nn::Mode mode);

// One transition: 2x2 stride-2 average pool after the 1x1 compression conv.
nn::Variable transition_forward(const nn::Variable& t, ReconTransition& trans);

// Full network on a preprocessed (2,h,w) or (B,2,h,w) tensor; returns the
// standardized-space output of length 2N (batched: (B, 2N)).
nn::Variable recon_net_forward(ReconModel& model, const nn::Variable& input,
                               nn::Mode mode);

// End-to-end inference: y -> reconstructed y_r. The 2N head outputs are
// de-standardized and packed as N complex samples (first N = real parts,
// last N = imaginary parts).
ComplexSignal recon_forward(const std::vector<cxd>& y, ReconModel& model);

// Batched inference for many records at once (outputs in input order).
std::vector<std::vector<cxd>> recon_forward_batch(
    ReconModel& model, const std::vector<const SlotRecord*>& records,
    int batch_size = 64);

struct ReconHyper {
  int epochs = 8;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int patience = 0;  // 0 disables early stopping
  std::uint64_t seed = 1;
};

struct LossCurve {
  // Entry 0 is the pre-training evaluation; entry e > 0 follows epoch e.
  std::vector<double> train, val;
};

// Minimizes the standardized mean squared error between the head output and
// y_r over the training records. Target statistics are computed from the
// training set and stored on the model. Throws NumericError if the loss goes
// non-finite.
LossCurve train_recon(ReconModel& model,
                      const std::vector<const SlotRecord*>& train,
                      const std::vector<const SlotRecord*>& val,
                      const ReconHyper& hyper);

void save_recon(const ReconModel& model, const std::string& path);
ReconModel load_recon(const std::string& path);

}  // namespace xltrack
