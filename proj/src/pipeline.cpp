#include "gvse/pipeline.hpp"

#include <chrono>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/log.hpp"

namespace gvse {

Dataset load_data(const ExperimentConfig& config) {
  if (config.data.synthetic) return generate_synthetic(config.data.spec, config.train.seed);
  return load_dataset(config.data.files);
}

KnowledgeGraph build_graph(const ExperimentConfig& config, const CategoryAttributeMatrix& cam) {
  if (config.graph.kind == GraphKind::Category) return build_category_graph(cam, config.graph.category_threshold);
  return build_attribute_graph(cam, config.graph.delta, config.graph.binarize);
}

WordEmbeddingTable build_embedding(const ExperimentConfig& config, const CategoryAttributeMatrix& cam) {
  const auto corpus = AttributeCorpus::from_membership(binarize_attributes(cam, config.graph.binarize));
  auto table = factorize(build_ppmi(corpus), config.embedding_dim, config.train.seed);
  table.names = cam.attribute_names;
  return table;
}

WordTargets word_targets(GraphKind kind, const WordEmbeddingTable& table, const Membership& membership) {
  if (kind == GraphKind::Attribute) return {table.vectors, membership};
  const auto classes = membership.rows();
  WordTargets t{Eigen::MatrixXd::Zero(classes, table.vectors.cols()), Membership::Identity(classes, classes)};
  for (Eigen::Index y = 0; y < classes; ++y) {
    for (const auto& target : class_targets(table, membership.row(y))) t.vectors.row(y) += target.vector.transpose();
    t.vectors.row(y) /= static_cast<double>(membership.row(y).cast<int>().sum());
  }
  return t;
}

ModelConfig model_config(const ExperimentConfig& config, const Dataset& dataset, const KnowledgeGraph& graph) {
  ModelConfig mc;
  mc.image_channels = dataset.channels();
  mc.image_size = dataset.image_size();
  mc.blocks = config.model.blocks.empty() ? default_backbone(mc.image_channels) : config.model.blocks;
  mc.gvse = config.model.gvse;
  mc.wiring = config.model.wiring;
  mc.fusion = config.model.gvse ? config.model.fusion : FusionMode::None;
  mc.latent = config.model.latent;
  mc.latent_dim = config.model.latent_dim;
  mc.node_dim = config.model.node_dim;
  mc.gcn_hidden = config.model.gcn_hidden;
  mc.word_dim = config.embedding_dim;
  mc.num_attributes = dataset.cam.num_attributes();
  mc.num_vertices = graph.num_vertices();
  mc.validate();
  return mc;
}

Run prepare_run(const ExperimentConfig& config) {
  config.validate();
  auto dataset = load_data(config);
  auto partition = partition_samples(dataset, config.data.seen_holdout, config.train.seed);
  auto graph = build_graph(config, dataset.cam);
  if (graph.edge_count() == 0) log::warn("knowledge graph has no edges (delta {})", graph.delta);
  auto embedding = build_embedding(config, dataset.cam);
  auto targets = word_targets(graph.kind, embedding, binarize_attributes(dataset.cam, config.graph.binarize));
  auto mc = model_config(config, dataset, graph);
  GvseModel model(std::move(mc), propagation_operator(graph, config.graph.self_loops), config.train.seed);
  return Run{config, std::move(dataset), std::move(partition), std::move(graph), std::move(embedding),
             std::move(targets), std::move(model)};
}

std::vector<EpochReport> train_run(Run& run, const EpochCallback& on_epoch) {
  Trainer trainer(run.model, run.dataset, run.partition, run.targets, run.config.train);
  std::vector<EpochReport> reports;
  for (std::size_t e = 0; e < run.config.train.epochs; ++e) {
    reports.push_back(trainer.run_epoch());
    const auto& r = reports.back();
    log::debug("epoch {}: L_A {:.4f} L_LT {:.4f} L_W {:.4f} total {:.4f}", r.epoch, r.l_a, r.l_lt, r.l_w, r.total);
    if (on_epoch) on_epoch(r);
  }
  return reports;
}

Setting parse_setting(std::string_view name) {
  if (name == "czsl") return Setting::Czsl;
  if (name == "gzsl") return Setting::Gzsl;
  throw ConfigError(fmt::format("unknown setting '{}' (czsl or gzsl)", name));
}

std::string_view to_string(Setting s) { return s == Setting::Czsl ? "czsl" : "gzsl"; }

Metrics evaluate_run(Run& run, Setting setting) {
  const auto& split = run.dataset.split;
  std::vector<std::size_t> test = run.partition.test_unseen;
  std::vector<std::size_t> space = split.unseen;
  if (setting == Setting::Gzsl) {
    test.insert(test.end(), run.partition.test_seen.begin(), run.partition.test_seen.end());
    space.clear();
    for (std::size_t c = 0; c < run.dataset.cam.num_categories(); ++c) space.push_back(c);
  }
  std::vector<std::size_t> labels;
  for (auto i : test) labels.push_back(run.dataset.labels[i]);

  const auto emb = embed_samples(run.model, run.dataset, test);
  std::vector<std::size_t> preds(test.size());
  if (run.model.config().latent) {
    std::vector<std::size_t> train_labels;
    for (auto i : run.partition.train) train_labels.push_back(run.dataset.labels[i]);
    const auto train_emb = embed_samples(run.model, run.dataset, run.partition.train);
    const auto protos = build_prototypes(train_emb.latent, train_labels, run.dataset.cam.values, split);
    for (std::size_t k = 0; k < test.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      preds[k] = predict_with_latent(emb.phi.row(row).transpose(), emb.latent.row(row).transpose(), protos, space,
                                     run.config.eval.latent_score);
    }
  } else {
    for (std::size_t k = 0; k < test.size(); ++k)
      preds[k] = predict_czsl(emb.phi.row(static_cast<Eigen::Index>(k)).transpose(), run.dataset.cam.values, space);
  }
  return setting == Setting::Czsl ? czsl_metrics(preds, labels, split) : gzsl_metrics(preds, labels, split);
}

std::vector<AblationArm> ablation_arms(const ExperimentConfig& base, std::string_view axis) {
  std::vector<AblationArm> arms;
  auto arm = [&](std::string name, auto mutate) {
    auto c = base;
    mutate(c);
    arms.push_back({std::move(name), std::move(c)});
  };
  if (axis == "wiring") {
    for (auto w : {WiringStrategy::EachBlock, WiringStrategy::EachStage, WiringStrategy::LastBlock})
      arm(std::string(to_string(w)), [w](ExperimentConfig& c) { c.model.wiring = w; });
  } else if (axis == "graph-type") {
    for (auto k : {GraphKind::Attribute, GraphKind::Category})
      arm(std::string(to_string(k)), [k](ExperimentConfig& c) { c.graph.kind = k; });
  } else if (axis == "fusion") {
    for (auto f : {FusionMode::Concat, FusionMode::Sum})
      arm(std::string(to_string(f)), [f](ExperimentConfig& c) { c.model.fusion = f; });
  } else if (axis == "delta") {
    for (double d : {0.25, 0.50, 0.75})
      arm(fmt::format("delta={:.2f}", d), [d](ExperimentConfig& c) {
        c.graph.kind = GraphKind::Attribute;
        c.graph.delta = d;
      });
  } else if (axis == "gamma") {
    for (double g : {0.0, 0.25, 0.5, 0.75, 1.0})
      arm(fmt::format("gamma={:.2f}", g), [g](ExperimentConfig& c) { c.train.weights.gamma = g; });
  } else if (axis == "gvse-on-off") {
    arm("gvse-on", [](ExperimentConfig& c) { c.model.gvse = true; });
    arm("gvse-off", [](ExperimentConfig& c) { c.model.gvse = false; });
  } else {
    throw ConfigError(fmt::format("unknown ablation axis '{}' (wiring, graph-type, fusion, delta, gamma, gvse-on-off)", axis));
  }
  return arms;
}

AblationRow run_arm(const AblationArm& arm) {
  AblationRow row;
  row.arm = arm.name;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto run = prepare_run(arm.config);
    train_run(run);
    row.acc = evaluate_run(run, Setting::Czsl).acc;
    const auto g = evaluate_run(run, Setting::Gzsl);
    row.acc_s = g.acc_s;
    row.acc_u = g.acc_u;
    row.h = g.h;
  } catch (const Error& e) {
    row.error = e.what();
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::string ablation_csv_header() { return "arm,acc,acc_s,acc_u,h,wall_ms,error"; }

std::string ablation_csv_row(const AblationRow& row) {
  std::string error = row.error;
  for (auto& ch : error)
    if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
  return fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.1f},{}", row.arm, row.acc, row.acc_s, row.acc_u, row.h,
                     row.wall_ms, error);
}

}  // namespace gvse
