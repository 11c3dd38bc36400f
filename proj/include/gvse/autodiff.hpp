#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "gvse/tensor.hpp"

namespace gvse {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Receives the upstream gradient of a node and scatters it into its inputs.
using Backprop = std::function<void(Tape&, std::span<const double> grad_out)>;

// Linear record of executed primitives. Nodes are appended in execution order,
// which is already a topological order, so backward is a single reverse sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Param& param);

  // Records a computed node. `inputs` are used only to decide whether the node
  // needs a gradient at all.
  Var record(Tensor value, std::span<const Var> inputs, Backprop backprop);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  // Gradient buffer of a node, allocated on first use. Only valid inside backward.
  std::span<double> grad_buffer(Var v);

  // Accumulates d(loss)/d(param) into every reachable Param. The loss must be
  // a single-element node of this tape.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Backprop backprop;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;

  std::deque<Node> nodes_;  // stable references across record()
};

}  // namespace gvse
