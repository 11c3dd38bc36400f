#include "gvse/model.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

WiringStrategy parse_wiring(std::string_view name) {
  if (name == "each-block") return WiringStrategy::EachBlock;
  if (name == "each-stage") return WiringStrategy::EachStage;
  if (name == "last-block") return WiringStrategy::LastBlock;
  throw ConfigError(fmt::format("unknown wiring strategy '{}'", name));
}

std::string_view to_string(WiringStrategy s) {
  switch (s) {
    case WiringStrategy::EachBlock: return "each-block";
    case WiringStrategy::EachStage: return "each-stage";
    case WiringStrategy::LastBlock: return "last-block";
  }
  return "?";
}

FusionMode parse_fusion(std::string_view name) {
  if (name == "concat") return FusionMode::Concat;
  if (name == "sum") return FusionMode::Sum;
  if (name == "none") return FusionMode::None;
  throw ConfigError(fmt::format("unknown fusion mode '{}'", name));
}

std::string_view to_string(FusionMode f) {
  switch (f) {
    case FusionMode::Concat: return "concat";
    case FusionMode::Sum: return "sum";
    case FusionMode::None: return "none";
  }
  return "?";
}

std::vector<std::size_t> wired_blocks(std::span<const CnnBlockSpec> blocks, WiringStrategy strategy) {
  std::vector<std::size_t> out;
  if (blocks.empty()) return out;
  switch (strategy) {
    case WiringStrategy::EachBlock:
      for (std::size_t i = 0; i < blocks.size(); ++i) out.push_back(i);
      break;
    case WiringStrategy::LastBlock:
      out.push_back(blocks.size() - 1);
      break;
    case WiringStrategy::EachStage:
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const bool stage_ends = i + 1 == blocks.size() || blocks[i + 1].stride > 1;
        if (stage_ends) out.push_back(i);
      }
      break;
  }
  return out;
}

std::vector<CnnBlockSpec> default_backbone(std::size_t image_channels) {
  return {{image_channels, 16, 2, 3}, {16, 16, 1, 3}, {16, 32, 2, 3}, {32, 32, 1, 3}};
}

std::vector<std::size_t> ModelConfig::spatial_sizes() const {
  std::vector<std::size_t> out;
  std::size_t side = image_size;
  for (const auto& b : blocks) {
    side = conv_output_size(side, b.kernel, b.stride, b.kernel / 2);
    out.push_back(side);
  }
  return out;
}

std::size_t ModelConfig::gcn_block_count() const { return gvse ? wired_blocks(blocks, wiring).size() : 0; }

std::size_t ModelConfig::embedding_width() const {
  if (!gvse) return visual_width();
  switch (fusion) {
    case FusionMode::Concat: return visual_width() + gcn_block_count() * word_dim;
    case FusionMode::Sum: return visual_width() + word_dim;
    case FusionMode::None: return visual_width();
  }
  return visual_width();
}

void ModelConfig::validate() const {
  if (blocks.empty()) throw ConfigError("model needs at least one CNN block");
  if (blocks.front().in_channels != image_channels) {
    throw ConfigError(fmt::format("first block expects {} channels, images have {}", blocks.front().in_channels,
                                  image_channels));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.out_channels == 0 || b.stride == 0 || b.kernel % 2 == 0) {
      throw ConfigError(fmt::format("CNN block {} has an invalid shape", i));
    }
    if (i > 0 && b.in_channels != blocks[i - 1].out_channels) {
      throw ConfigError(fmt::format("CNN block {} input channels {} != previous output {}", i, b.in_channels,
                                    blocks[i - 1].out_channels));
    }
  }
  spatial_sizes();  // throws when a kernel outgrows its input
  if (num_attributes < 2) throw ConfigError("model needs >= 2 attributes");
  if (latent && latent_dim == 0) throw ConfigError("latent width must be positive");
  if (gvse) {
    if (num_vertices < 2) throw ConfigError("GCN pipeline needs a graph with >= 2 vertices");
    if (node_dim == 0 || gcn_hidden == 0 || word_dim == 0) throw ConfigError("GCN widths must be positive");
  }
}

// --- layer primitives -----------------------------------------------------

Var reshape_in(Var x_map, Var w_in, std::optional<Var> b_in, std::size_t vertices, std::size_t node_dim) {
  const auto& ws = w_in.shape();
  if (x_map.shape().size() != 3 || ws.size() != 2 || ws[0] != vertices * node_dim || ws[1] != x_map.shape()[0]) {
    throw DimensionError(fmt::format("reshape_in: W_in {} incompatible with map {} for {} x {} vertex features",
                                     to_string(ws), to_string(x_map.shape()), vertices, node_dim));
  }
  const Var pooled = reshape(global_avg_pool(x_map), {x_map.shape()[0], 1});
  Var h = reshape(matmul(w_in, pooled), {1, vertices * node_dim});
  if (b_in) h = add_row_bias(h, *b_in);
  return reshape(h, {vertices, node_dim});
}

Var gcn_layer(Var h, Var propagation, Var w, std::optional<Var> b, Activation act) {
  Var out = matmul(matmul(propagation, h), w);
  if (b) out = add_row_bias(out, *b);
  return activation(out, act);
}

Var squeeze(Var f, Var f_sq) { return matmul(f, f_sq); }

Var feedback_gate(Var x_map, Var f, Var w_out) {
  const auto& xs = x_map.shape();
  if (xs.size() != 3 || f.shape().size() != 2 || f.shape()[1] != xs[1] * xs[2]) {
    throw DimensionError(
        fmt::format("gate_feedback: f {} does not cover the map {}", to_string(f.shape()), to_string(xs)));
  }
  if (w_out.shape().size() != 2 || w_out.shape()[0] != f.shape()[0] || w_out.shape()[1] != xs[0]) {
    throw DimensionError(fmt::format("gate_feedback: W_out {} must be {} x {}", to_string(w_out.shape()),
                                     f.shape()[0], xs[0]));
  }
  return reshape(sigmoid(matmul(transpose(w_out), f)), xs);
}

Var gate_feedback(Var x_map, Var f, Var w_out) { return mul(feedback_gate(x_map, f, w_out), x_map); }

Var srf_pool(Var f, Var f_sq) { return mean_rows(squeeze(f, f_sq)); }

Var fuse_embedding(Var theta, std::span<const Var> srfs, FusionMode mode) {
  if (mode == FusionMode::None) return theta;
  if (srfs.empty()) throw ContractError("fuse_embedding needs at least one SRF");
  std::vector<Var> parts{theta};
  if (mode == FusionMode::Concat) {
    parts.insert(parts.end(), srfs.begin(), srfs.end());
  } else {
    Var total = srfs[0];
    for (std::size_t i = 1; i < srfs.size(); ++i) total = add(total, srfs[i]);
    parts.push_back(total);
  }
  return concat(parts, 0);
}

// --- model ----------------------------------------------------------------

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Param uniform(std::string name, Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> data(element_count(shape));
    for (auto& v : data) v = dist(rng_);
    return Param(std::move(name), Tensor(std::move(shape), std::move(data)));
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

GvseModel::GvseModel(ModelConfig config, PropagationOperator propagation, std::uint64_t seed)
    : config_(std::move(config)), propagation_(std::move(propagation)) {
  config_.validate();
  if (config_.gvse && propagation_.size() != config_.num_vertices) {
    throw DimensionError(fmt::format("propagation operator has {} vertices, model expects {}", propagation_.size(),
                                     config_.num_vertices));
  }
  Initializer init(seed);
  cnn_.reserve(config_.blocks.size());
  for (std::size_t i = 0; i < config_.blocks.size(); ++i) {
    const auto& b = config_.blocks[i];
    const auto fan_in = b.in_channels * b.kernel * b.kernel;
    cnn_.push_back(CnnBlockParams{b, init.uniform(fmt::format("cnn{}.kernel", i), {b.out_channels, b.in_channels, b.kernel, b.kernel}, fan_in),
                                  init.uniform(fmt::format("cnn{}.bias", i), {b.out_channels}, fan_in)});
  }

  if (config_.gvse) {
    const auto sides = config_.spatial_sizes();
    const auto wired = wired_blocks(config_.blocks, config_.wiring);
    const auto n = config_.num_vertices;
    gcn_.reserve(wired.size());
    for (std::size_t g = 0; g < wired.size(); ++g) {
      const auto blk = wired[g];
      const auto channels = config_.blocks[blk].out_channels;
      const auto width = sides[blk] * sides[blk];
      const auto in_dim = config_.node_dim + (g == 0 ? 0 : config_.word_dim);
      const auto name = [g](std::string_view p) { return fmt::format("gcn{}.{}", g, p); };
      std::optional<Param> proj;
      if (g > 0 && gcn_[g - 1].width != width) {
        proj.emplace(init.uniform(name("proj"), {gcn_[g - 1].width, width}, gcn_[g - 1].width));
      }
      gcn_.push_back(GcnBlockParams{
          blk, width,
          init.uniform(name("in_w"), {n * config_.node_dim, channels}, channels),
          init.uniform(name("in_b"), {n * config_.node_dim}, channels),
          init.uniform(name("w1"), {in_dim, config_.gcn_hidden}, in_dim),
          init.uniform(name("b1"), {config_.gcn_hidden}, in_dim),
          init.uniform(name("w2"), {config_.gcn_hidden, width}, config_.gcn_hidden),
          init.uniform(name("b2"), {width}, config_.gcn_hidden),
          std::move(proj),
          init.uniform(name("squeeze"), {width, config_.word_dim}, width),
          init.uniform(name("out_w"), {n, channels}, n),
      });
    }
  }

  const auto width = config_.embedding_width();
  heads_.phi_w.emplace(init.uniform("head.phi_w", {width, config_.num_attributes}, width));
  heads_.phi_b.emplace(init.uniform("head.phi_b", {config_.num_attributes}, width));
  if (config_.latent) {
    heads_.lat_w.emplace(init.uniform("head.lat_w", {width, config_.latent_dim}, width));
    heads_.lat_b.emplace(init.uniform("head.lat_b", {config_.latent_dim}, width));
  }
}

std::vector<Param*> GvseModel::parameters() {
  std::vector<Param*> out;
  for (auto& c : cnn_) {
    out.push_back(&c.kernel);
    out.push_back(&c.bias);
  }
  for (auto& g : gcn_) {
    for (Param* p : {&g.in_w, &g.in_b, &g.w1, &g.b1, &g.w2, &g.b2}) out.push_back(p);
    if (g.proj) out.push_back(&*g.proj);
    out.push_back(&g.squeeze);
    out.push_back(&g.out_w);
  }
  out.push_back(&*heads_.phi_w);
  out.push_back(&*heads_.phi_b);
  if (heads_.lat_w) {
    out.push_back(&*heads_.lat_w);
    out.push_back(&*heads_.lat_b);
  }
  return out;
}

std::vector<const Param*> GvseModel::parameters() const {
  auto mut = const_cast<GvseModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t GvseModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value().size();
  return n;
}

BoundModel GvseModel::bind(Tape& tape) {
  BoundModel b;
  b.model = this;
  if (config_.gvse) b.propagation = tape.constant(Tensor::from_eigen(propagation_.matrix));
  for (auto& c : cnn_) b.cnn.emplace_back(tape.leaf(c.kernel), tape.leaf(c.bias));
  for (auto& g : gcn_) {
    BoundModel::Gcn v{tape.leaf(g.in_w), tape.leaf(g.in_b), tape.leaf(g.w1), tape.leaf(g.b1), tape.leaf(g.w2),
                      tape.leaf(g.b2), Var{}, Var{}, std::nullopt};
    if (g.proj) v.proj = tape.leaf(*g.proj);
    v.squeeze = tape.leaf(g.squeeze);
    v.out_w = tape.leaf(g.out_w);
    b.gcn.push_back(v);
  }
  b.phi_w = tape.leaf(*heads_.phi_w);
  b.phi_b = tape.leaf(*heads_.phi_b);
  if (heads_.lat_w) {
    b.lat_w = tape.leaf(*heads_.lat_w);
    b.lat_b = tape.leaf(*heads_.lat_b);
  }
  return b;
}

namespace {

Var linear_head(Var embedding, Var w, Var b) {
  const auto width = embedding.shape()[0];
  const Var row = matmul(reshape(embedding, {1, width}), w);
  return reshape(add_row_bias(row, b), {w.shape()[1]});
}

}  // namespace

ForwardTrace GvseModel::forward(const BoundModel& bound, Var image, const ForwardOptions& options) const {
  if (bound.model != this) throw ContractError("forward with parameters bound from another model");
  const auto& is = image.shape();
  if (is.size() != 3 || is[0] != config_.image_channels || is[1] != config_.image_size || is[2] != config_.image_size) {
    throw DimensionError(fmt::format("image {} does not match configured {}x{}x{}", to_string(is),
                                     config_.image_channels, config_.image_size, config_.image_size));
  }

  ForwardTrace trace;
  std::vector<Var> srfs;
  std::size_t next_gcn = 0;
  Var x = image;
  for (std::size_t blk = 0; blk < cnn_.size(); ++blk) {
    try {
      const auto& spec = cnn_[blk].spec;
      x = relu(add_channel_bias(conv2d(x, bound.cnn[blk].first, spec.stride, spec.kernel / 2), bound.cnn[blk].second));
      trace.cnn_outputs.push_back(x);

      if (next_gcn < gcn_.size() && gcn_[next_gcn].cnn_block == blk) {
        const auto& gv = bound.gcn[next_gcn];
        const bool first = next_gcn == 0;
        const bool last = next_gcn + 1 == gcn_.size();

        BlockTrace bt;
        bt.cnn_block = blk;
        bt.x_map = x;
        Var input = reshape_in(x, gv.in_w, gv.in_b, config_.num_vertices, config_.node_dim);
        if (!first) {
          Var parts[] = {input, trace.blocks.back().squeezed};
          input = concat(parts, 1);
        }
        const Var hidden = gcn_layer(input, bound.propagation, gv.w1, gv.b1, Activation::Relu);
        Var f = gcn_layer(hidden, bound.propagation, gv.w2, gv.b2, last ? Activation::Identity : Activation::Relu);
        if (!first) {
          const Var prev = trace.blocks.back().f;
          f = add(f, gv.proj ? matmul(prev, *gv.proj) : prev);
        }
        bt.f = f;
        bt.squeezed = squeeze(f, gv.squeeze);
        bt.srf = mean_rows(bt.squeezed);
        srfs.push_back(bt.srf);
        if (options.force_gates_open) {
          bt.x_gated = x;
        } else {
          bt.gate = feedback_gate(x, f, gv.out_w);
          bt.has_gate = true;
          bt.x_gated = mul(bt.gate, x);
        }
        x = bt.x_gated;
        trace.blocks.push_back(bt);
        ++next_gcn;
      }
    } catch (const NumericFault& e) {
      throw NumericFault(fmt::format("numeric fault in block {}: {}", blk, e.what()));
    }
  }

  try {
    trace.theta = global_avg_pool(x);
    trace.theta_plus = config_.gvse ? fuse_embedding(trace.theta, srfs, config_.fusion) : trace.theta;
    trace.phi = linear_head(trace.theta_plus, bound.phi_w, bound.phi_b);
    if (bound.lat_w) trace.phi_lat = linear_head(trace.theta_plus, *bound.lat_w, *bound.lat_b);
    if (!trace.blocks.empty()) trace.word_vectors = trace.blocks.back().squeezed;
  } catch (const NumericFault& e) {
    throw NumericFault(fmt::format("numeric fault in heads: {}", e.what()));
  }
  return trace;
}

}  // namespace gvse
