#include "xltrack/autograd.hpp"

#include <unordered_set>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

Tensor& GraphNode::ensure_grad() {
  if (grad.shape != value.shape) {
    grad = Tensor::zeros(value.shape);
  }
  return grad;
}

Variable::Variable(Tensor value, bool requires_grad)
    : node_(std::make_shared<GraphNode>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)), var_(std::move(value), /*requires_grad=*/true) {
  var_.grad();  // keep gradients allocated so optimizers can always read them
}

void Parameter::zero_grad() { var_.grad().fill(0.0); }

Variable make_node(Tensor value, std::vector<std::shared_ptr<GraphNode>> parents,
                   std::function<void(GraphNode&)> backward_fn) {
  auto node = std::make_shared<GraphNode>();
  node->value = std::move(value);
  bool rg = false;
  for (const auto& p : parents) rg = rg || (p && p->requires_grad);
  node->requires_grad = rg;
  node->parents = std::move(parents);
  if (rg) node->backward_fn = std::move(backward_fn);
  return Variable(node);
}

void backward(const Variable& loss) {
  if (!loss.defined()) throw ShapeError("backward: undefined loss variable");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(loss.value().shape));
  }

  // Iterative post-order over the subgraph that requires gradients.
  std::vector<GraphNode*> order;
  std::unordered_set<GraphNode*> seen;
  struct Frame {
    GraphNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  GraphNode* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing upstream wants gradients
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      GraphNode* p = f.node->parents[f.next_parent++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    GraphNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace xltrack::nn
