#pragma once

#include <cstdint>
#include <vector>

#include "xltrack/autograd.hpp"

namespace xltrack::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter moment accumulators.
struct AdamSlot {
  Tensor m, v;
};

// Bias-corrected single-tensor update; `t` is the 1-based step counter.
void adam_update(Tensor& value, const Tensor& grad, AdamSlot& slot,
                 const AdamConfig& cfg, std::int64_t t);

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg = {});

  void step();       // applies one update from the parameters' current grads
  void zero_grad();  // clears all parameter grads
  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamSlot> slots_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace xltrack::nn
