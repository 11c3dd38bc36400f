#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gvse/autodiff.hpp"

namespace gvse {

enum class Activation { Identity, Relu, Sigmoid };

Activation parse_activation(std::string_view name);

// Matrix algebra (rank-2 operands).
Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise, operands of identical shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var activation(Var x, Activation kind);
inline Var relu(Var x) { return activation(x, Activation::Relu); }
inline Var sigmoid(Var x) { return activation(x, Activation::Sigmoid); }

// Broadcast bias adds: b[c] over the rows of x[r x c], and b[C] over the
// channels of x[C x H x W].
Var add_row_bias(Var x, Var b);
Var add_channel_bias(Var x, Var b);

/// Cross-correlation of x[C_in x H x W] with kernels[C_out x C_in x k x k].
/// Output spatial size is (H + 2*pad - k) / stride + 1, which must divide evenly.
Var conv2d(Var x, Var kernels, std::size_t stride, std::size_t pad);

/// Per-channel spatial mean of x[C x R x Co].
Var global_avg_pool(Var x);

/// Joins tensors along `axis`; all other dimensions must agree.
Var concat(std::span<const Var> parts, std::size_t axis);
Var reshape(Var x, Shape shape);

// Reductions.
Var sum(Var x);
Var mean(Var x);
Var mean_rows(Var x);  // [r x c] -> [c]
Var row_sum(Var x);    // [r x c] -> [r]
Var logsumexp_rows(Var x);

// Indexing.
Var gather_rows(Var x, std::span<const std::size_t> rows);
Var select_columns(Var x, std::span<const std::size_t> cols);
Var pick(Var x, std::span<const std::size_t> col_per_row);  // out[i] = x[i, col[i]]

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

}  // namespace gvse
