#include "xltrack/optimizer.hpp"

#include <cmath>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

void adam_update(Tensor& value, const Tensor& grad, AdamSlot& slot,
                 const AdamConfig& cfg, std::int64_t t) {
  check_same_shape(value, grad, "adam_update");
  if (slot.m.shape != value.shape) {
    slot.m = Tensor::zeros(value.shape);
    slot.v = Tensor::zeros(value.shape);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::int64_t i = 0; i < value.size(); ++i) {
    const double g = grad[i];
    slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
    slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = slot.m[i] / bc1;
    const double vhat = slot.v[i] / bc2;
    value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  slots_.resize(params_.size());
}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(params_[i]->value(), params_[i]->grad(), slots_[i], cfg_, t_);
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace xltrack::nn
