#include "gvse/ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

namespace {

void require_rank(Var v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw DimensionError(fmt::format("{} expects a rank-{} tensor, got {}", op, rank, to_string(v.shape())));
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{} shape mismatch: {} vs {}", op, to_string(a.shape()), to_string(b.shape())));
  }
}

Tape& tape_of(Var a) {
  if (!a.tape) throw ContractError("operation on an unbound Var");
  return *a.tape;
}

void accumulate(Tape& t, Var v, std::span<const double> g) {
  if (!t.requires_grad(v)) return;
  auto buf = t.grad_buffer(v);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

MatrixMap grad_matrix(Tape& t, Var v, std::size_t rows, std::size_t cols) {
  return MatrixMap(t.grad_buffer(v).data(), rows, cols);
}

ConstMatrixMap as_map(std::span<const double> g, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(g.data(), rows, cols);
}

std::vector<double> to_vector(const RowMatrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto p = a.shape()[0], q = a.shape()[1], r = b.shape()[1];
  if (b.shape()[0] != q) {
    throw DimensionError(
        fmt::format("matmul inner dimensions disagree: {} x {}", to_string(a.shape()), to_string(b.shape())));
  }
  RowMatrix out(p, r);
  out.noalias() = a.value().as_matrix() * b.value().as_matrix();
  Var in[] = {a, b};
  return tape_of(a).record(Tensor({p, r}, to_vector(out)), in, [a, b, p, q, r](Tape& t, std::span<const double> g) {
    auto go = as_map(g, p, r);
    if (t.requires_grad(a)) grad_matrix(t, a, p, q).noalias() += go * t.value(b).as_matrix().transpose();
    if (t.requires_grad(b)) grad_matrix(t, b, q, r).noalias() += t.value(a).as_matrix().transpose() * go;
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const auto rows = a.shape()[0], cols = a.shape()[1];
  RowMatrix out = a.value().as_matrix().transpose();
  Var in[] = {a};
  return tape_of(a).record(Tensor({cols, rows}, to_vector(out)), in, [a, rows, cols](Tape& t, std::span<const double> g) {
    grad_matrix(t, a, rows, cols) += as_map(g, cols, rows).transpose();
  });
}

namespace {

template <typename Fwd, typename Bwd>
Var binary_elementwise(Var a, Var b, const char* name, Fwd fwd, Bwd bwd) {
  require_same_shape(a, b, name);
  const auto& av = a.value().values();
  const auto& bv = b.value().values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  Var in[] = {a, b};
  return tape_of(a).record(Tensor(a.shape(), std::move(out)), in, [a, b, bwd](Tape& t, std::span<const double> g) {
    const auto& x = t.value(a).values();
    const auto& y = t.value(b).values();
    const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
    std::span<double> da, db;
    if (ga) da = t.grad_buffer(a);
    if (gb) db = t.grad_buffer(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto [dx, dy] = bwd(x[i], y[i], g[i]);
      if (ga) da[i] += dx;
      if (gb) db[i] += dy;
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g) { return std::pair{g, g}; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double g) { return std::pair{g, -g}; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return std::pair{g * y, g * x}; });
}

Var scale(Var a, double factor) {
  const auto& av = a.value().values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  Var in[] = {a};
  return tape_of(a).record(Tensor(a.shape(), std::move(out)), in, [a, factor](Tape& t, std::span<const double> g) {
    auto da = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
  });
}

Var add_scalar(Var a, double offset) {
  const auto& av = a.value().values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + offset;
  Var in[] = {a};
  return tape_of(a).record(Tensor(a.shape(), std::move(out)), in,
                           [a](Tape& t, std::span<const double> g) { accumulate(t, a, g); });
}

Var activation(Var x, Activation kind) {
  if (kind == Activation::Identity) return x;
  const auto& xv = x.value().values();
  std::vector<double> out(xv.size());
  if (kind == Activation::Relu) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  }
  Var in[] = {x};
  Tape& tape = tape_of(x);
  Tensor result(x.shape(), std::move(out));
  const std::size_t self = tape.size();
  return tape.record(std::move(result), in, [x, kind, self](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    if (kind == Activation::Relu) {
      const auto& xv = t.value(x).values();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] > 0.0 ? g[i] : 0.0;
    } else {
      const auto& yv = t.value(Var{&t, self}).values();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * yv[i] * (1.0 - yv[i]);
    }
  });
}

Var add_row_bias(Var x, Var b) {
  require_rank(x, 2, "add_row_bias");
  require_rank(b, 1, "add_row_bias");
  const auto rows = x.shape()[0], cols = x.shape()[1];
  if (b.shape()[0] != cols) {
    throw DimensionError(fmt::format("add_row_bias: bias {} does not match {}", to_string(b.shape()), to_string(x.shape())));
  }
  const auto& xv = x.value().values();
  const auto& bv = b.value().values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = xv[i * cols + j] + bv[j];
  Var in[] = {x, b};
  return tape_of(x).record(Tensor(x.shape(), std::move(out)), in, [x, b, rows, cols](Tape& t, std::span<const double> g) {
    accumulate(t, x, g);
    if (t.requires_grad(b)) {
      auto db = t.grad_buffer(b);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) db[j] += g[i * cols + j];
    }
  });
}

Var add_channel_bias(Var x, Var b) {
  require_rank(x, 3, "add_channel_bias");
  require_rank(b, 1, "add_channel_bias");
  const auto channels = x.shape()[0];
  const auto plane = x.shape()[1] * x.shape()[2];
  if (b.shape()[0] != channels) {
    throw DimensionError(
        fmt::format("add_channel_bias: bias {} does not match {}", to_string(b.shape()), to_string(x.shape())));
  }
  const auto& xv = x.value().values();
  const auto& bv = b.value().values();
  std::vector<double> out(xv.size());
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = xv[c * plane + i] + bv[c];
  Var in[] = {x, b};
  return tape_of(x).record(Tensor(x.shape(), std::move(out)), in,
                           [x, b, channels, plane](Tape& t, std::span<const double> g) {
                             accumulate(t, x, g);
                             if (t.requires_grad(b)) {
                               auto db = t.grad_buffer(b);
                               for (std::size_t c = 0; c < channels; ++c)
                                 for (std::size_t i = 0; i < plane; ++i) db[c] += g[c * plane + i];
                             }
                           });
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ConfigError("conv2d stride must be positive");
  const std::size_t padded = in + 2 * pad;
  if (padded < kernel) {
    throw ConfigError(fmt::format("conv2d: kernel {} exceeds padded input {} (in {}, pad {})", kernel, padded, in, pad));
  }
  return (padded - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t c_in, h, w, c_out, k, stride, pad, h_out, w_out;
  std::size_t patch() const { return c_in * k * k; }
  std::size_t positions() const { return h_out * w_out; }
};

// Column matrix [c_in*k*k x h_out*w_out]; out-of-bounds taps read zero.
RowMatrix im2col(const ConvGeometry& geo, const double* x) {
  RowMatrix col = RowMatrix::Zero(geo.patch(), geo.positions());
  for (std::size_t c = 0; c < geo.c_in; ++c)
    for (std::size_t ki = 0; ki < geo.k; ++ki)
      for (std::size_t kj = 0; kj < geo.k; ++kj) {
        const std::size_t row = (c * geo.k + ki) * geo.k + kj;
        for (std::size_t oi = 0; oi < geo.h_out; ++oi) {
          const auto ii = static_cast<std::ptrdiff_t>(oi * geo.stride + ki) - static_cast<std::ptrdiff_t>(geo.pad);
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(geo.h)) continue;
          for (std::size_t oj = 0; oj < geo.w_out; ++oj) {
            const auto jj = static_cast<std::ptrdiff_t>(oj * geo.stride + kj) - static_cast<std::ptrdiff_t>(geo.pad);
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(geo.w)) continue;
            col(row, oi * geo.w_out + oj) = x[(c * geo.h + ii) * geo.w + jj];
          }
        }
      }
  return col;
}

void col2im_add(const ConvGeometry& geo, const RowMatrix& col, std::span<double> dx) {
  for (std::size_t c = 0; c < geo.c_in; ++c)
    for (std::size_t ki = 0; ki < geo.k; ++ki)
      for (std::size_t kj = 0; kj < geo.k; ++kj) {
        const std::size_t row = (c * geo.k + ki) * geo.k + kj;
        for (std::size_t oi = 0; oi < geo.h_out; ++oi) {
          const auto ii = static_cast<std::ptrdiff_t>(oi * geo.stride + ki) - static_cast<std::ptrdiff_t>(geo.pad);
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(geo.h)) continue;
          for (std::size_t oj = 0; oj < geo.w_out; ++oj) {
            const auto jj = static_cast<std::ptrdiff_t>(oj * geo.stride + kj) - static_cast<std::ptrdiff_t>(geo.pad);
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(geo.w)) continue;
            dx[(c * geo.h + ii) * geo.w + jj] += col(row, oi * geo.w_out + oj);
          }
        }
      }
}

}  // namespace

Var conv2d(Var x, Var kernels, std::size_t stride, std::size_t pad) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  const auto& xs = x.shape();
  const auto& ks = kernels.shape();
  if (ks[1] != xs[0] || ks[2] != ks[3]) {
    throw DimensionError(
        fmt::format("conv2d: kernels {} incompatible with input {}", to_string(ks), to_string(xs)));
  }
  ConvGeometry geo{xs[0], xs[1], xs[2], ks[0], ks[2], stride, pad, 0, 0};
  geo.h_out = conv_output_size(geo.h, geo.k, stride, pad);
  geo.w_out = conv_output_size(geo.w, geo.k, stride, pad);

  const RowMatrix col = im2col(geo, x.value().data());
  const ConstMatrixMap kmat(kernels.value().data(), geo.c_out, geo.patch());
  RowMatrix out(geo.c_out, geo.positions());
  out.noalias() = kmat * col;

  Var in[] = {x, kernels};
  return tape_of(x).record(
      Tensor({geo.c_out, geo.h_out, geo.w_out}, to_vector(out)), in, [x, kernels, geo](Tape& t, std::span<const double> g) {
        auto go = as_map(g, geo.c_out, geo.positions());
        if (t.requires_grad(kernels)) {
          const RowMatrix col = im2col(geo, t.value(x).data());
          grad_matrix(t, kernels, geo.c_out, geo.patch()).noalias() += go * col.transpose();
        }
        if (t.requires_grad(x)) {
          const ConstMatrixMap kmat(t.value(kernels).data(), geo.c_out, geo.patch());
          RowMatrix dcol(geo.patch(), geo.positions());
          dcol.noalias() = kmat.transpose() * go;
          col2im_add(geo, dcol, t.grad_buffer(x));
        }
      });
}

Var global_avg_pool(Var x) {
  require_rank(x, 3, "global_avg_pool");
  const auto channels = x.shape()[0];
  const auto plane = x.shape()[1] * x.shape()[2];
  const auto& xv = x.value().values();
  std::vector<double> out(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += xv[c * plane + i];
    out[c] = s / static_cast<double>(plane);
  }
  Var in[] = {x};
  return tape_of(x).record(Tensor({channels}, std::move(out)), in, [x, channels, plane](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < plane; ++i) dx[c * plane + i] += g[c] * inv;
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError(fmt::format("concat axis {} out of range for {}", axis, to_string(first)));
  }
  if (parts.size() == 1) return parts[0];
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) {
      throw DimensionError(fmt::format("concat along axis {}: {} incompatible with {}", axis, to_string(s), to_string(first)));
    }
    out_shape[axis] += s[axis];
  }
  // outer = product of dims before axis, inner = product after.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_stride = out_shape[axis] * inner;

  std::vector<double> out(element_count(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.shape()[axis] * inner;
    const auto& pv = p.value().values();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.begin() + o * block, block, out.begin() + o * out_stride + offset);
    offset += block;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::size_t> blocks;
  for (const auto& p : parts) blocks.push_back(p.shape()[axis] * inner);
  return tape_of(parts[0]).record(
      Tensor(out_shape, std::move(out)), inputs,
      [inputs, offsets, blocks, outer, out_stride](Tape& t, std::span<const double> g) {
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          if (!t.requires_grad(inputs[k])) continue;
          auto dp = t.grad_buffer(inputs[k]);
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < blocks[k]; ++i) dp[o * blocks[k] + i] += g[o * out_stride + offsets[k] + i];
        }
      });
}

Var reshape(Var x, Shape shape) {
  if (element_count(shape) != x.value().size()) {
    throw DimensionError(fmt::format("cannot reshape {} to {}", to_string(x.shape()), to_string(shape)));
  }
  Var in[] = {x};
  return tape_of(x).record(x.value().reshaped(std::move(shape)), in,
                           [x](Tape& t, std::span<const double> g) { accumulate(t, x, g); });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  Var in[] = {x};
  return tape_of(x).record(Tensor::scalar(s), in, [x](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    for (auto& d : dx) d += g[0];
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean_rows(Var x) {
  require_rank(x, 2, "mean_rows");
  const auto rows = x.shape()[0], cols = x.shape()[1];
  const auto& xv = x.value().values();
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += xv[i * cols + j];
  for (auto& v : out) v /= static_cast<double>(rows);
  Var in[] = {x};
  return tape_of(x).record(Tensor({cols}, std::move(out)), in, [x, rows, cols](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) dx[i * cols + j] += g[j] * inv;
  });
}

Var row_sum(Var x) {
  require_rank(x, 2, "row_sum");
  const auto rows = x.shape()[0], cols = x.shape()[1];
  const auto& xv = x.value().values();
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i] += xv[i * cols + j];
  Var in[] = {x};
  return tape_of(x).record(Tensor({rows}, std::move(out)), in, [x, rows, cols](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) dx[i * cols + j] += g[i];
  });
}

Var logsumexp_rows(Var x) {
  require_rank(x, 2, "logsumexp_rows");
  const auto rows = x.shape()[0], cols = x.shape()[1];
  const auto& xv = x.value().values();
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* r = xv.data() + i * cols;
    const double mx = *std::max_element(r, r + cols);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::exp(r[j] - mx);
    out[i] = mx + std::log(s);
  }
  Var in[] = {x};
  Tape& tape = tape_of(x);
  const std::size_t self = tape.size();
  return tape.record(Tensor({rows}, std::move(out)), in, [x, rows, cols, self](Tape& t, std::span<const double> g) {
    const auto& xv = t.value(x).values();
    const auto& lse = t.value(Var{&t, self}).values();
    auto dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) dx[i * cols + j] += g[i] * std::exp(xv[i * cols + j] - lse[i]);
  });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  const auto n = x.shape()[0], cols = x.shape()[1];
  if (rows.empty()) throw DimensionError("gather_rows with no indices");
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const auto& xv = x.value().values();
  std::vector<double> out(idx.size() * cols);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= n) throw DimensionError(fmt::format("gather_rows index {} out of range {}", idx[k], n));
    std::copy_n(xv.begin() + idx[k] * cols, cols, out.begin() + k * cols);
  }
  Var in[] = {x};
  return tape_of(x).record(Tensor({idx.size(), cols}, std::move(out)), in, [x, idx, cols](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < cols; ++j) dx[idx[k] * cols + j] += g[k * cols + j];
  });
}

Var select_columns(Var x, std::span<const std::size_t> cols) {
  require_rank(x, 2, "select_columns");
  const auto rows = x.shape()[0], n = x.shape()[1];
  if (cols.empty()) throw DimensionError("select_columns with no indices");
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  for (auto c : idx)
    if (c >= n) throw DimensionError(fmt::format("select_columns index {} out of range {}", c, n));
  const auto& xv = x.value().values();
  const auto k = idx.size();
  std::vector<double> out(rows * k);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = xv[i * n + idx[j]];
  Var in[] = {x};
  return tape_of(x).record(Tensor({rows, k}, std::move(out)), in, [x, idx, rows, n](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    const auto k = idx.size();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < k; ++j) dx[i * n + idx[j]] += g[i * k + j];
  });
}

Var pick(Var x, std::span<const std::size_t> col_per_row) {
  require_rank(x, 2, "pick");
  const auto rows = x.shape()[0], n = x.shape()[1];
  if (col_per_row.size() != rows) {
    throw DimensionError(fmt::format("pick needs {} indices, got {}", rows, col_per_row.size()));
  }
  std::vector<std::size_t> idx(col_per_row.begin(), col_per_row.end());
  const auto& xv = x.value().values();
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (idx[i] >= n) throw DimensionError(fmt::format("pick index {} out of range {}", idx[i], n));
    out[i] = xv[i * n + idx[i]];
  }
  Var in[] = {x};
  return tape_of(x).record(Tensor({rows}, std::move(out)), in, [x, idx, n](Tape& t, std::span<const double> g) {
    auto dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < idx.size(); ++i) dx[i * n + idx[i]] += g[i];
  });
}

}  // namespace gvse
