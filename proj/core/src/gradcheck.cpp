#include "xltrack/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

namespace {
double eval_scalar(const LossBuilder& op, const std::vector<Tensor>& inputs) {
  std::vector<Variable> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, /*requires_grad=*/false);
  const Variable loss = op(vars);
  if (loss.value().size() != 1) {
    throw ShapeError("gradient_check: op must produce a scalar, got shape " +
                     shape_str(loss.value().shape));
  }
  return loss.value()[0];
}
}  // namespace

double gradient_check(const LossBuilder& op, std::vector<Tensor> inputs,
                      double epsilon) {
  if (epsilon <= 0.0) {
    throw DomainError("gradient_check: epsilon must be positive");
  }

  // Analytic pass.
  std::vector<Variable> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, /*requires_grad=*/true);
  const Variable loss = op(vars);
  if (loss.value().size() != 1) {
    throw ShapeError("gradient_check: op must produce a scalar, got shape " +
                     shape_str(loss.value().shape));
  }
  backward(loss);

  double max_rel = 0.0;
  for (std::size_t vi = 0; vi < inputs.size(); ++vi) {
    const Tensor analytic = vars[vi].grad();
    for (std::int64_t i = 0; i < inputs[vi].size(); ++i) {
      const double saved = inputs[vi][i];
      inputs[vi][i] = saved + epsilon;
      const double up = eval_scalar(op, inputs);
      inputs[vi][i] = saved - epsilon;
      const double down = eval_scalar(op, inputs);
      inputs[vi][i] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace xltrack::nn
