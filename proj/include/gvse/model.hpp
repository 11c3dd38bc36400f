#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gvse/autodiff.hpp"
#include "gvse/graph.hpp"
#include "gvse/ops.hpp"

namespace gvse {

struct CnnBlockSpec {
  std::size_t in_channels = 3;
  std::size_t out_channels = 16;
  std::size_t stride = 1;
  std::size_t kernel = 3;
};

// Which CNN blocks get a paired GCN block. A stage is a run of blocks that
// starts at the first block or at any block with stride > 1.
enum class WiringStrategy { EachBlock, EachStage, LastBlock };
enum class FusionMode { Concat, Sum, None };

WiringStrategy parse_wiring(std::string_view name);
std::string_view to_string(WiringStrategy s);
FusionMode parse_fusion(std::string_view name);
std::string_view to_string(FusionMode f);

std::vector<std::size_t> wired_blocks(std::span<const CnnBlockSpec> blocks, WiringStrategy strategy);

struct ModelConfig {
  std::size_t image_channels = 3;
  std::size_t image_size = 32;
  std::vector<CnnBlockSpec> blocks;
  bool gvse = true;  // false: plain CNN, no GCN pipeline, no fusion
  WiringStrategy wiring = WiringStrategy::EachBlock;
  FusionMode fusion = FusionMode::Concat;
  bool latent = true;
  std::size_t latent_dim = 16;
  std::size_t node_dim = 16;
  std::size_t gcn_hidden = 64;
  std::size_t word_dim = 10;
  std::size_t num_attributes = 0;  // width of the attribute head
  std::size_t num_vertices = 0;    // knowledge graph size

  /// Spatial side length after each CNN block.
  std::vector<std::size_t> spatial_sizes() const;
  std::size_t visual_width() const { return blocks.back().out_channels; }
  std::size_t gcn_block_count() const;
  /// Width of the fused embedding for the configured fusion mode.
  std::size_t embedding_width() const;
  void validate() const;
};

/// Paper-default desk-scale backbone: four 3x3 blocks, stride-2 at stage starts.
std::vector<CnnBlockSpec> default_backbone(std::size_t image_channels = 3);

// --- layer primitives -----------------------------------------------------

/// Pools x_map[C x R x Co] to [C], maps through W_in[(n*d_node) x C] (+ bias)
/// and reshapes to n x d_node vertex features.
Var reshape_in(Var x_map, Var w_in, std::optional<Var> b_in, std::size_t vertices, std::size_t node_dim);

/// act(P * H * W + b)
Var gcn_layer(Var h, Var propagation, Var w, std::optional<Var> b, Activation act);

/// f[m x w] * F_sq[w x d], no bias and no activation.
Var squeeze(Var f, Var f_sq);

/// sigmoid(W_out^T f) reshaped to the feature-map shape of x_map.
Var feedback_gate(Var x_map, Var f, Var w_out);

/// feedback_gate(x_map, f, W_out) * x_map, elementwise.
Var gate_feedback(Var x_map, Var f, Var w_out);

/// Vertex mean of squeeze(f, F_sq).
Var srf_pool(Var f, Var f_sq);

/// theta joined with the SRFs (concat) or with their sum.
Var fuse_embedding(Var theta, std::span<const Var> srfs, FusionMode mode);

// --- parameters -----------------------------------------------------------

struct CnnBlockParams {
  CnnBlockSpec spec;
  Param kernel;
  Param bias;
};

struct GcnBlockParams {
  std::size_t cnn_block = 0;
  std::size_t width = 0;  // R * Co of the paired feature map
  Param in_w, in_b;
  Param w1, b1;
  Param w2, b2;
  std::optional<Param> proj;  // residual projection when widths differ
  Param squeeze;
  Param out_w;
};

struct HeadParams {
  std::optional<Param> phi_w, phi_b;  // always present once built
  std::optional<Param> lat_w, lat_b;
};

/// Per-block record of one forward pass.
struct BlockTrace {
  std::size_t cnn_block = 0;
  Var x_map;      // X^(l)
  Var x_gated;    // gated map fed onward
  Var f;          // f_G^(l)
  Var squeezed;   // F_sq(f_G^(l)), m x d
  Var srf;        // vertex-pooled squeeze, d
  Var gate;       // C x R x Co, absent when gates are forced open
  bool has_gate = false;
};

struct ForwardTrace {
  std::vector<Var> cnn_outputs;
  std::vector<BlockTrace> blocks;
  Var theta;
  Var theta_plus;
  Var phi;
  std::optional<Var> phi_lat;
  std::optional<Var> word_vectors;  // squeeze of the last GCN block
};

struct ForwardOptions {
  bool force_gates_open = false;
};

class GvseModel;

/// Model parameters bound as leaves on one tape.
struct BoundModel {
  const GvseModel* model = nullptr;
  Var propagation;
  std::vector<std::pair<Var, Var>> cnn;
  struct Gcn {
    Var in_w, in_b, w1, b1, w2, b2, squeeze, out_w;
    std::optional<Var> proj;
  };
  std::vector<Gcn> gcn;
  Var phi_w, phi_b;
  std::optional<Var> lat_w, lat_b;
};

class GvseModel {
 public:
  GvseModel(ModelConfig config, PropagationOperator propagation, std::uint64_t seed);

  GvseModel(const GvseModel&) = delete;
  GvseModel& operator=(const GvseModel&) = delete;
  GvseModel(GvseModel&&) = default;
  GvseModel& operator=(GvseModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const PropagationOperator& propagation() const { return propagation_; }

  std::vector<CnnBlockParams>& cnn() { return cnn_; }
  const std::vector<CnnBlockParams>& cnn() const { return cnn_; }
  std::vector<GcnBlockParams>& gcn() { return gcn_; }
  const std::vector<GcnBlockParams>& gcn() const { return gcn_; }
  HeadParams& heads() { return heads_; }
  const HeadParams& heads() const { return heads_; }

  /// Every parameter in declaration order (the checkpoint order).
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  std::size_t parameter_count() const;

  BoundModel bind(Tape& tape);

  /// image is [C x H x W]. Throws NumericFault naming the block on NaN/Inf.
  ForwardTrace forward(const BoundModel& bound, Var image, const ForwardOptions& options = {}) const;

 private:
  ModelConfig config_;
  PropagationOperator propagation_;
  std::vector<CnnBlockParams> cnn_;
  std::vector<GcnBlockParams> gcn_;
  HeadParams heads_;
};

}  // namespace gvse
