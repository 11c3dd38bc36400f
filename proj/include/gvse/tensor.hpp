#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gvse {

using Shape = std::vector<std::size_t>;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

// Dense row-major f64 array. Values are validated finite at construction and
// never change afterwards; anything that needs new values builds a new Tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor full(Shape shape, double v);
  static Tensor vector(std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  template <typename Derived>
  static Tensor from_eigen(const Eigen::MatrixBase<Derived>& m) {
    RowMatrix tmp = m;
    std::vector<double> data(tmp.data(), tmp.data() + tmp.size());
    return Tensor({static_cast<std::size_t>(tmp.rows()), static_cast<std::size_t>(tmp.cols())},
                  std::move(data));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool is_scalar() const noexcept { return data_.size() == 1; }

  std::span<const double> values() const noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const;

  // Copy with a different shape of equal element count.
  Tensor reshaped(Shape shape) const;

  // View a rank-2 tensor (or a rank-1 tensor as a column) as an Eigen matrix.
  ConstMatrixMap as_matrix() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_{};
  std::vector<double> data_{};
};

/// Trainable tensor with its accumulated gradient.
class Param {
 public:
  Param(std::string name, Tensor value);

  const std::string& name() const noexcept { return name_; }
  std::uint64_t id() const noexcept { return id_; }

  const Tensor& value() const noexcept { return value_; }
  // Raw accumulator; may hold non-finite values until the optimizer checks it.
  std::span<const double> grad() const noexcept { return grad_; }
  std::span<double> grad_mut() noexcept { return grad_; }

  void set_value(Tensor value);
  void accumulate_grad(std::span<const double> g);
  void zero_grad();

 private:
  std::string name_;
  std::uint64_t id_;
  Tensor value_;
  std::vector<double> grad_;
};

}  // namespace gvse
