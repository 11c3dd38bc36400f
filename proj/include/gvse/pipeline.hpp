#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gvse/config.hpp"
#include "gvse/data.hpp"
#include "gvse/embed.hpp"
#include "gvse/eval.hpp"
#include "gvse/graph.hpp"
#include "gvse/model.hpp"
#include "gvse/train.hpp"

namespace gvse {

Dataset load_data(const ExperimentConfig& config);
KnowledgeGraph build_graph(const ExperimentConfig& config, const CategoryAttributeMatrix& cam);
WordEmbeddingTable build_embedding(const ExperimentConfig& config, const CategoryAttributeMatrix& cam);

/// Attribute graphs regress each member attribute's vector; category graphs
/// regress the class vertex onto the mean vector of its member attributes.
WordTargets word_targets(GraphKind kind, const WordEmbeddingTable& table, const Membership& membership);

ModelConfig model_config(const ExperimentConfig& config, const Dataset& dataset, const KnowledgeGraph& graph);

/// Everything a train or eval run derives deterministically from the config.
struct Run {
  ExperimentConfig config;
  Dataset dataset;
  SamplePartition partition;
  KnowledgeGraph graph;
  WordEmbeddingTable embedding;
  WordTargets targets;
  GvseModel model;
};

Run prepare_run(const ExperimentConfig& config);

using EpochCallback = std::function<void(const EpochReport&)>;
std::vector<EpochReport> train_run(Run& run, const EpochCallback& on_epoch = {});

enum class Setting { Czsl, Gzsl };
Setting parse_setting(std::string_view name);
std::string_view to_string(Setting s);

Metrics evaluate_run(Run& run, Setting setting);

struct AblationArm {
  std::string name;
  ExperimentConfig config;
};

/// Arms of one ablation axis: wiring, graph-type, fusion, delta, gamma or gvse-on-off.
std::vector<AblationArm> ablation_arms(const ExperimentConfig& base, std::string_view axis);

struct AblationRow {
  std::string arm;
  double acc = 0.0, acc_s = 0.0, acc_u = 0.0, h = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

/// Trains and evaluates one arm; failures become rows carrying the error text.
AblationRow run_arm(const AblationArm& arm);

std::string ablation_csv_header();
std::string ablation_csv_row(const AblationRow& row);

}  // namespace gvse
