#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gvse/data.hpp"
#include "gvse/eval.hpp"
#include "gvse/graph.hpp"
#include "gvse/loss.hpp"
#include "gvse/model.hpp"
#include "gvse/optim.hpp"

namespace gvse {

struct DataConfig {
  bool synthetic = true;
  SyntheticSpec spec;
  DatasetPaths files;
  double seen_holdout = 0.2;
};

struct GraphConfig {
  GraphKind kind = GraphKind::Attribute;
  double delta = 0.75;
  BinarizeMode binarize = BinarizeMode::Nonzero;
  double category_threshold = 0.5;
  bool self_loops = true;
};

struct ModelSection {
  std::vector<CnnBlockSpec> blocks;  // empty: default backbone
  bool gvse = true;
  WiringStrategy wiring = WiringStrategy::EachBlock;
  FusionMode fusion = FusionMode::Concat;
  bool latent = true;
  std::size_t latent_dim = 16;
  std::size_t node_dim = 16;
  std::size_t gcn_hidden = 64;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch = 32;
  std::size_t epochs = 30;
  LossWeights weights;
  bool transductive = false;
  std::uint64_t seed = 7;
};

struct EvalConfig {
  LatentScore latent_score = LatentScore::Distance;
};

struct ExperimentConfig {
  DataConfig data;
  GraphConfig graph;
  std::size_t embedding_dim = 10;
  ModelSection model;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path output = "out";

  void validate() const;
  /// FNV-1a of the canonical JSON form, excluding the output directory.
  std::string digest() const;
};

/// Every key optional; unknown keys anywhere are a ConfigError. Relative file
/// paths resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace gvse
