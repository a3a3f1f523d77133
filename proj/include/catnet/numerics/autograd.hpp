#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "catnet/numerics/tensor.hpp"

namespace catnet {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One recorded operation. `seq` is the global recording index: a backward pass
// visits nodes in strictly decreasing seq, i.e. exact reverse recording order.
struct Node {
  Tensor value;
  Tensor grad;  // materialized on first accumulation
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<NodePtr> parents;
  std::function<void(const Node&)> backward;

  void accumulate(const Tensor& g);
  Tensor& grad_buffer();
};

// Handle to a value that may take part in reverse-mode differentiation.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Zero tensor of matching shape when no gradient has reached this node.
  Tensor grad() const;
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  void zero_grad();

  // In-place overwrite for optimizer updates and pinning; never called while a
  // graph that uses this value is alive.
  Tensor& mutable_value() { return node_->value; }

  const NodePtr& node() const { return node_; }

 private:
  friend Var make_result(Tensor, std::vector<Var>, std::function<void(const Node&)>);
  NodePtr node_;
};

// Records an operation result. `backward` receives the output node (with its
// grad populated) and must accumulate into the parents that require grad.
// Nothing is recorded when no parent requires grad or grad mode is off.
Var make_result(Tensor value, std::vector<Var> parents,
                std::function<void(const Node&)> backward);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Seeds d(out)/d(out) = 1 and runs the recorded graph backwards.
void backward(const Var& scalar_output);

struct Parameter {
  std::string name;
  Var var;
};

// Ordered named collection of trainable parameters.
class ParameterSet {
 public:
  Var add(std::string name, Tensor init);
  const Var& get(const std::string& name) const;
  Var& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::vector<Parameter>& items() { return params_; }
  const std::vector<Parameter>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_numel() const;

  void zero_grad();

  // Deep copy of the values (fresh nodes, no gradients).
  ParameterSet clone() const;

 private:
  std::vector<Parameter> params_;
};

}  // namespace catnet
