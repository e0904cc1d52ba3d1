#pragma once

#include <functional>
#include <vector>

#include "xltrack/autograd.hpp"

namespace xltrack::nn {

// Builds a scalar loss from gradient-enabled Variables wrapping `inputs`.
// Must be deterministic and side-effect-free with respect to its inputs.
using LossBuilder = std::function<Variable(const std::vector<Variable>&)>;

// Compares reverse-mode gradients against central finite differences
// ((f(x+eps) - f(x-eps)) / (2*eps)) for every entry of every input. Returns
// the maximum relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double gradient_check(const LossBuilder& op, std::vector<Tensor> inputs,
                      double epsilon = 1e-4);

}  // namespace xltrack::nn
