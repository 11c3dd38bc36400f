#include "gvse/autodiff.hpp"

#include "gvse/error.hpp"

namespace gvse {

const Tensor& Var::value() const {
  if (!tape) throw ContractError("use of an unbound Var");
  return tape->value(*this);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Param& param) {
  nodes_.push_back(Node{param.value(), {}, nullptr, &param, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backprop backprop) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.tape != this) throw ContractError("operation mixes Vars from different tapes");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backprop) : Backprop{}, nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw ContractError("Var does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<double> Tape::grad_buffer(Var v) {
  auto& n = nodes_.at(v.id);
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  const auto& root = node(loss);
  if (!root.value.is_scalar()) {
    throw ContractError("backward needs a scalar loss, got shape " + to_string(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_buffer(loss)[0] = 1.0;

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      n.param->accumulate_grad(n.grad);
    } else if (n.backprop) {
      // Parents always have smaller ids, so the vector never reallocates here.
      n.backprop(*this, n.grad);
    }
  }
}

}  // namespace gvse
