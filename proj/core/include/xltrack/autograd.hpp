#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xltrack/tensor.hpp"

namespace xltrack::nn {

// One node of the recorded forward computation. `backward_fn` reads this
// node's gradient and accumulates into the parents' gradients.
struct GraphNode {
  Tensor value;
  Tensor grad;  // allocated lazily; same shape as value once set
  bool requires_grad = false;
  std::vector<std::shared_ptr<GraphNode>> parents;
  std::function<void(GraphNode&)> backward_fn;

  Tensor& ensure_grad();
};

// Lightweight handle to a graph node. Copying a Variable shares the node.
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);
  explicit Variable(std::shared_ptr<GraphNode> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  Tensor& grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }
  const std::shared_ptr<GraphNode>& node() const { return node_; }

 private:
  std::shared_ptr<GraphNode> node_;
};

// Trainable tensor: a named leaf Variable whose gradient persists across
// backward calls until explicitly zeroed.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  const std::string& name() const { return name_; }
  Tensor& value() { return var_.mutable_value(); }
  const Tensor& value() const { return var_.value(); }
  Tensor& grad() { return var_.grad(); }
  void zero_grad();
  const Variable& variable() const { return var_; }

 private:
  std::string name_;
  Variable var_;
};

// Reverse-mode sweep from a scalar loss: exact gradients for every node that
// requires them. Throws ShapeError when the loss is not a scalar.
void backward(const Variable& loss);

// Node construction helper shared by all ops. Parents without gradient
// requirements are still linked (they keep values alive) but the backward
// closure is dropped when no parent needs a gradient.
Variable make_node(Tensor value, std::vector<std::shared_ptr<GraphNode>> parents,
                   std::function<void(GraphNode&)> backward_fn);

}  // namespace xltrack::nn
