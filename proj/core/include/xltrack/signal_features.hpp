#pragma once

#include <vector>

#include "xltrack/channel.hpp"
#include "xltrack/layers.hpp"

namespace xltrack {

// Min/max normalization of a real sequence to [0, 1]; a constant sequence maps
// to all zeros (degenerate fallback).
std::vector<double> normalize_signal(const std::vector<double>& v);

// Complex analogue used in the snapshot pipeline: subtracts the smallest-
// magnitude entry and divides by (largest - smallest). Magnitude ordering
// decides min/max; first occurrence wins ties. Degenerate spread -> zeros.
std::vector<cxd> minmax_normalize(const std::vector<cxd>& v);

// Unnormalized forward DFT: X_k = sum_n x_n * exp(-j*2*pi*k*n/N).
std::vector<cxd> dft(const std::vector<cxd>& x);

// Entropy of the normalized energy distribution p = e / sum(e), natural log,
// 0*ln(0) := 0. An all-zero energy vector sets *degenerate and returns 0.
double spectral_entropy(const std::vector<double>& energies, bool* degenerate);

// Time/frequency summary of a complex signal, computed on the min/max-
// normalized magnitude sequence: [mean, variance, spectral energy, spectral
// entropy].
struct TfFeatures {
  double mean = 0.0;
  double variance = 0.0;
  double energy = 0.0;   // sum |DFT|^2
  double entropy = 0.0;  // in [0, ln N]
  bool degenerate = false;

  std::vector<double> as_vector() const { return {mean, variance, energy, entropy}; }
};

TfFeatures tf_features(const std::vector<cxd>& y_hat);

// 2 x n1 x n2 tensor from a length-N complex signal (channel 0 = real parts,
// channel 1 = imaginary parts, row-major over the grid).
nn::Tensor preprocess_ris(const std::vector<cxd>& y_hat, int n1, int n2);

// Fixed lightweight CNN used as a feature projector: conv+ReLU -> maxpool ->
// conv+ReLU -> maxpool -> flatten -> dense. Weights are drawn once from a
// seeded generator and kept frozen; persisting them makes runs auditable.
struct CnnConfig {
  int in_h = 10, in_w = 10;
  int filters1 = 16, filters2 = 32;
  int kernel = 3;  // square, padding preserves dims
  int pool = 2;    // 2x2 stride-2 max pool after each conv
  int n_f = 32;    // output feature length

  int flattened_length() const;
  void validate() const;
};

struct CnnExtractor {
  CnnConfig cfg;
  nn::Conv2dLayer conv1, conv2;
  nn::DenseLayer fc;

  CnnExtractor() = default;
  CnnExtractor(const CnnConfig& cfg, Rng& rng);

  std::vector<double> features(const nn::Tensor& input) const;
  std::vector<nn::Parameter*> parameters();
};

// final = [cnn | tf | aoa]; each component recoverable by offset.
struct FeatureVector {
  std::vector<double> cnn;
  std::vector<double> tf;
  std::vector<double> aoa;
  std::vector<double> final;
};

FeatureVector final_features(std::vector<double> cnn, std::vector<double> tf,
                             std::vector<double> aoa);

}  // namespace xltrack
