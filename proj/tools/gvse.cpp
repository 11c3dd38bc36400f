// gvse command-line entry point: build-graph, train-embed, train, eval, ablate.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "gvse/checkpoint.hpp"
#include "gvse/config.hpp"
#include "gvse/error.hpp"
#include "gvse/io.hpp"
#include "gvse/log.hpp"
#include "gvse/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gvse;

namespace {

enum Exit { Ok = 0, Usage = 1, Input = 2, Numeric = 3, Mismatch = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string setting = "czsl";
  std::string axis;
};

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig c = o.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (!o.out.empty()) c.output = o.out;
  c.validate();
  return c;
}

int cmd_build_graph(const ExperimentConfig& c) {
  const auto dataset = load_data(c);
  const auto graph = build_graph(c, dataset.cam);
  auto j = graph_to_json(graph);
  j["stats"] = graph_stats(graph);
  j["config_digest"] = c.digest();
  const auto path = c.output / "graph.json";
  write_text_file(path, j.dump(2) + "\n");
  if (graph.edge_count() == 0) log::warn("graph has no edges at delta {}", graph.delta);
  fmt::print("graph: {} vertices, {} edges, delta {} -> {}\n", graph.num_vertices(), graph.edge_count(), graph.delta,
             path.string());
  return Ok;
}

int cmd_train_embed(const ExperimentConfig& c) {
  const auto dataset = load_data(c);
  const auto corpus = AttributeCorpus::from_membership(binarize_attributes(dataset.cam, c.graph.binarize));
  const auto ppmi = build_ppmi(corpus);
  auto table = factorize(ppmi, c.embedding_dim, c.train.seed);
  table.names = dataset.cam.attribute_names;
  const double err = reconstruction_error(ppmi, table);
  log::info("PPMI reconstruction error (Frobenius) at d={}: {:.3e}", c.embedding_dim, err);
  const auto path = c.output / "embedding.csv";
  write_embedding_csv(table, path, "config_digest=" + c.digest());
  fmt::print("embedding: {} x {}, reconstruction error {:.3e} -> {}\n", table.size(), table.dim(), err, path.string());
  return Ok;
}

int cmd_train(const ExperimentConfig& c) {
  auto run = prepare_run(c);
  const auto digest = c.digest();
  std::string log_text;
  const auto reports = train_run(run, [&](const EpochReport& r) {
    auto j = epoch_report_to_json(r);
    j["config_digest"] = digest;
    log_text += j.dump() + "\n";
    log::info("epoch {:>3}  L_A {:.4f}  L_LT {:.4f}  L_W {:.4f}  total {:.4f}  ({:.0f} ms)", r.epoch, r.l_a, r.l_lt,
              r.l_w, r.total, r.wall_ms);
  });
  write_text_file(c.output / "train_log.jsonl", log_text);
  const auto ckpt = c.output / "checkpoint.bin";
  save_checkpoint(run.model, digest, config_to_json(c), ckpt);
  if (reports.empty()) {
    fmt::print("trained 0 epochs; checkpoint {} holds the initialization\n", ckpt.string());
  } else {
    const auto& r = reports.back();
    fmt::print("trained {} epochs: L_A {:.4f} L_LT {:.4f} L_W {:.4f} total {:.4f} -> {}\n", r.epoch, r.l_a, r.l_lt,
               r.l_w, r.total, ckpt.string());
  }
  return Ok;
}

int cmd_eval(const ExperimentConfig& c, const Options& o) {
  const auto setting = parse_setting(o.setting);
  const fs::path ckpt = o.checkpoint.empty() ? c.output / "checkpoint.bin" : fs::path(o.checkpoint);
  const auto digest = c.digest();
  // Digest check before the (costly) rebuild of the run.
  const auto header = read_checkpoint_header(ckpt);
  if (header.digest != digest) {
    throw ArtifactMismatch(fmt::format("checkpoint {} has config digest {}, current config is {}", ckpt.string(),
                                       header.digest, digest));
  }
  auto run = prepare_run(c);
  load_checkpoint(run.model, digest, ckpt);
  const auto metrics = evaluate_run(run, setting);
  const auto split = fmt::format("{}S/{}U", run.dataset.split.seen.size(), run.dataset.split.unseen.size());
  const auto path = c.output / fmt::format("metrics_{}.json", to_string(setting));
  write_text_file(path, metrics_to_json(metrics, split, digest).dump(2) + "\n");
  if (setting == Setting::Czsl) {
    fmt::print("czsl: acc {:.4f} over {} unseen classes -> {}\n", metrics.acc, metrics.unseen.per_class.size(),
               path.string());
  } else {
    fmt::print("gzsl: acc_s {:.4f} acc_u {:.4f} h {:.4f} -> {}\n", metrics.acc_s, metrics.acc_u, metrics.h,
               path.string());
  }
  return Ok;
}

int cmd_ablate(const ExperimentConfig& c, const Options& o) {
  if (o.axis.empty()) throw ConfigError("ablate needs --axis");
  const auto arms = ablation_arms(c, o.axis);
  std::string csv = fmt::format("# config_digest={} axis={}\n{}\n", c.digest(), o.axis, ablation_csv_header());
  for (const auto& arm : arms) {
    log::info("arm {}", arm.name);
    const auto row = run_arm(arm);
    if (!row.error.empty()) log::warn("arm {} failed: {}", arm.name, row.error);
    csv += ablation_csv_row(row) + "\n";
    fmt::print("{}\n", ablation_csv_row(row));
  }
  const auto path = c.output / fmt::format("ablation_{}.csv", o.axis);
  write_text_file(path, csv);
  fmt::print("{} arms -> {}\n", arms.size(), path.string());
  return Ok;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Numeric: return Numeric;
    case ErrorKind::ArtifactMismatch: return Mismatch;
    default: return Input;
  }
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();
  CLI::App app{"Graph-based visual-semantic entanglement for zero-shot learning"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override train.seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* build_graph_cmd = app.add_subcommand("build-graph", "build the knowledge graph and write graph.json");
  auto* embed_cmd = app.add_subcommand("train-embed", "factorize attribute PPMI into word vectors");
  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoint.bin and train_log.jsonl");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint; writes metrics_<setting>.json");
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep one ablation axis; writes ablation_<axis>.csv");
  for (auto* sub : {build_graph_cmd, embed_cmd, train_cmd, eval_cmd, ablate_cmd}) common(sub);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint path (default <out>/checkpoint.bin)");
  eval_cmd->add_option("--setting", o.setting, "czsl or gzsl")->check(CLI::IsMember({"czsl", "gzsl"}));
  ablate_cmd->add_option("--axis", o.axis, "wiring|graph-type|fusion|delta|gamma|gvse-on-off")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : Usage;
  }

  try {
    const auto config = resolve_config(o);
    if (*build_graph_cmd) return cmd_build_graph(config);
    if (*embed_cmd) return cmd_train_embed(config);
    if (*train_cmd) return cmd_train(config);
    if (*eval_cmd) return cmd_eval(config, o);
    if (*ablate_cmd) return cmd_ablate(config, o);
  } catch (const Error& e) {
    log::error("{}", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    log::error("{}", e.what());
    return Input;
  }
  return Usage;
}
