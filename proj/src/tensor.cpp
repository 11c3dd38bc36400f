#include "gvse/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor shape " + to_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (element_count(shape_) != data_.size()) {
    throw DimensionError(fmt::format("tensor shape {} needs {} values, got {}", to_string(shape_),
                                     element_count(shape_), data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericFault(fmt::format("non-finite value {} at flat index {} of tensor {}", data_[i], i,
                                     to_string(shape_)));
    }
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::vector(std::vector<double> data) {
  auto n = data.size();
  return Tensor({n}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError(fmt::format("axis {} out of range for tensor {}", axis, to_string(shape_)));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ContractError("item() on non-scalar tensor " + to_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

ConstMatrixMap Tensor::as_matrix() const {
  if (rank() == 2) return ConstMatrixMap(data_.data(), shape_[0], shape_[1]);
  if (rank() == 1) return ConstMatrixMap(data_.data(), shape_[0], 1);
  throw DimensionError("as_matrix on tensor " + to_string(shape_));
}

namespace {
std::atomic<std::uint64_t> next_param_id{1};
}

Param::Param(std::string name, Tensor value)
    : name_(std::move(name)), id_(next_param_id++), value_(std::move(value)), grad_(value_.size(), 0.0) {}

void Param::set_value(Tensor value) {
  if (value.shape() != value_.shape()) {
    throw DimensionError(fmt::format("param {} expects shape {}, got {}", name_, to_string(value_.shape()),
                                     to_string(value.shape())));
  }
  value_ = std::move(value);
}

void Param::accumulate_grad(std::span<const double> g) {
  if (g.size() != grad_.size()) throw DimensionError("gradient size mismatch for param " + name_);
  for (std::size_t i = 0; i < grad_.size(); ++i) grad_[i] += g[i];
}

void Param::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace gvse
