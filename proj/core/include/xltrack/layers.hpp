#pragma once

#include <vector>

#include "xltrack/autograd.hpp"
#include "xltrack/rng.hpp"

namespace xltrack::nn {

enum class Mode { Train, Eval };
enum class PoolKind { Max, Avg };
enum class UpsampleMode { Nearest, Bilinear };

// ---- elementwise & reductions (strict same-shape; no broadcasting) ----
Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable scale(const Variable& a, double c);
Variable sum(const Variable& a);       // -> scalar
Variable mean(const Variable& a);      // -> scalar
Variable relu(const Variable& a);
Variable sigmoid(const Variable& a);
Variable tanh_op(const Variable& a);
Variable mse_loss(const Variable& a, const Variable& b);  // mean((a-b)^2)

// ---- shape ----
Variable reshape(const Variable& a, std::vector<int> new_shape);
Variable flatten(const Variable& a);  // full row-major linearization
Variable concat(const std::vector<Variable>& parts, int axis);

// ---- neural layers ----
// x: (n) or (B, n); W: (m, n); b: (m). Returns W*x + b per row.
Variable dense(const Variable& x, const Variable& W, const Variable& b);
Variable linear(const Variable& x, const Variable& W);  // dense without bias

// x: (C,H,W) or (B,C,H,W); W: (C_out, C_in, k, k); cross-correlation with
// zero padding; H' = floor((H + 2*padding - k)/stride) + 1.
Variable conv2d(const Variable& x, const Variable& W, const Variable& b,
                int stride, int padding);

// Windowed max/mean, no padding; output side floor((H - k)/stride) + 1.
Variable pool2d(const Variable& x, PoolKind kind, int k, int stride);

// Nearest replication or bilinear interpolation (corner alignment off).
Variable upsample(const Variable& x, int target_h, int target_w, UpsampleMode mode);

// Train mode zeroes entries with probability `rate` and scales survivors by
// 1/(1-rate); eval mode is the identity. Mask drawn from `rng` in flat order.
Variable dropout(const Variable& x, double rate, Mode mode, Rng& rng);

struct BatchNormStats {
  Tensor running_mean;  // shape (C)
  Tensor running_var;
};

// Channel axis is 0 for (C,H,W), 1 for (B,C,H,W). Train mode normalizes by
// batch statistics (epsilon 1e-5) and updates the running stats in place
// (momentum 0.1, unbiased variance); eval mode normalizes by the running stats.
Variable batch_norm(const Variable& x, const Variable& gamma, const Variable& beta,
                    BatchNormStats& stats, Mode mode, double momentum = 0.1,
                    double eps = 1e-5);

// ---- parameter-owning layer containers ----
struct DenseLayer {
  Parameter weight, bias;

  DenseLayer() = default;
  DenseLayer(const std::string& name, int in, int out, Rng& rng);
  Variable operator()(const Variable& x) const {
    return dense(x, weight.variable(), bias.variable());
  }
};

struct Conv2dLayer {
  Parameter weight, bias;
  int stride = 1, padding = 0;

  Conv2dLayer() = default;
  Conv2dLayer(const std::string& name, int c_in, int c_out, int k, int stride,
              int padding, Rng& rng);
  Variable operator()(const Variable& x) const {
    return conv2d(x, weight.variable(), bias.variable(), stride, padding);
  }
};

struct BatchNormLayer {
  Parameter gamma, beta;
  BatchNormStats stats;

  BatchNormLayer() = default;
  BatchNormLayer(const std::string& name, int channels);
  Variable operator()(const Variable& x, Mode mode) {
    return batch_norm(x, gamma.variable(), beta.variable(), stats, mode);
  }
};

}  // namespace xltrack::nn
