#include "gvse/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/io.hpp"

namespace gvse {

namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects anything it did not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{} has the wrong type", label(), key));
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError(fmt::format("unknown config key '{}'", qualified(item.key())));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

void ExperimentConfig::validate() const {
  if (data.synthetic) {
    data.spec.validate();
  } else {
    require(!data.files.images.empty() && !data.files.labels.empty() && !data.files.attributes.empty() &&
                !data.files.split.empty(),
            "data.files needs images, labels, attributes and split paths");
  }
  require(std::isfinite(data.seen_holdout) && data.seen_holdout >= 0.0 && data.seen_holdout < 1.0,
          "data.seen_holdout must lie in [0, 1)");
  require(in_unit(graph.delta), fmt::format("graph.delta must lie in [0, 1], got {}", graph.delta));
  require(std::isfinite(graph.category_threshold) && graph.category_threshold >= -1.0 && graph.category_threshold <= 1.0,
          "graph.category_threshold must lie in [-1, 1]");
  require(embedding_dim >= 1, "embedding.d must be >= 1");
  require(model.latent_dim >= 1 && model.node_dim >= 1 && model.gcn_hidden >= 1, "model widths must be >= 1");
  for (const auto& b : model.blocks) {
    require(b.stride == 1 || b.stride == 2, "model.blocks stride must be 1 or 2");
    require(b.in_channels >= 1 && b.out_channels >= 1, "model.blocks channels must be >= 1");
  }
  train.adam.validate();
  train.weights.validate();
  require(train.batch >= 2, "train.batch must be >= 2");
}

std::string ExperimentConfig::digest() const {
  auto j = config_to_json(*this);
  j.erase("output");
  return fnv1a_hex(j.dump());
}

ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section root(j, "");

  auto data = root.child("data");
  std::string source = "synthetic";
  data.get("source", source);
  require(source == "synthetic" || source == "files", "data.source must be 'synthetic' or 'files'");
  c.data.synthetic = source == "synthetic";
  data.get("seen_holdout", c.data.seen_holdout);
  {
    auto s = data.child("synthetic");
    auto& sp = c.data.spec;
    s.get("classes", sp.classes);
    s.get("seen", sp.seen);
    s.get("attributes", sp.attributes);
    s.get("image_size", sp.image_size);
    s.get("samples_per_class", sp.samples_per_class);
    s.get("sigma", sp.sigma);
    s.get("pattern_seed", sp.pattern_seed);
    s.get("group_size", sp.group_size);
    std::string structure(to_string(sp.structure));
    s.get("structure", structure);
    sp.structure = parse_structure(structure);
    s.finish();
  }
  {
    auto f = data.child("files");
    std::string images, labels, attributes, split;
    f.get("images", images);
    f.get("labels", labels);
    f.get("attributes", attributes);
    f.get("split", split);
    c.data.files = {resolve(images, base_dir), resolve(labels, base_dir), resolve(attributes, base_dir),
                    resolve(split, base_dir)};
    f.finish();
  }
  data.finish();

  auto graph = root.child("graph");
  std::string kind(to_string(c.graph.kind)), binarize(to_string(c.graph.binarize));
  graph.get("type", kind);
  graph.get("delta", c.graph.delta);
  graph.get("binarize", binarize);
  graph.get("category_threshold", c.graph.category_threshold);
  graph.get("self_loops", c.graph.self_loops);
  graph.finish();
  c.graph.kind = parse_graph_kind(kind);
  c.graph.binarize = parse_binarize_mode(binarize);

  auto embedding = root.child("embedding");
  embedding.get("d", c.embedding_dim);
  embedding.finish();

  auto model = root.child("model");
  if (model.has("blocks")) {
    const auto& blocks = model.raw("blocks");
    require(blocks.is_array() && !blocks.empty(), "model.blocks must be a non-empty array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      Section b(blocks[i], fmt::format("model.blocks[{}]", i));
      CnnBlockSpec spec;
      b.get("in", spec.in_channels);
      b.get("out", spec.out_channels);
      b.get("stride", spec.stride);
      b.finish();
      c.model.blocks.push_back(spec);
    }
  }
  std::string wiring(to_string(c.model.wiring)), fusion(to_string(c.model.fusion));
  model.get("gvse", c.model.gvse);
  model.get("wiring", wiring);
  model.get("fusion", fusion);
  model.get("latent", c.model.latent);
  model.get("latent_dim", c.model.latent_dim);
  model.get("node_dim", c.model.node_dim);
  model.get("gcn_hidden", c.model.gcn_hidden);
  model.finish();
  c.model.wiring = parse_wiring(wiring);
  c.model.fusion = parse_fusion(fusion);

  auto train = root.child("train");
  train.get("lr", c.train.adam.lr);
  train.get("beta1", c.train.adam.beta1);
  train.get("beta2", c.train.adam.beta2);
  train.get("eps", c.train.adam.eps);
  train.get("batch", c.train.batch);
  train.get("epochs", c.train.epochs);
  train.get("gamma", c.train.weights.gamma);
  train.get("alpha", c.train.weights.alpha);
  train.get("bias_weight", c.train.weights.bias_weight);
  train.get("transductive", c.train.transductive);
  train.get("seed", c.train.seed);
  train.finish();

  auto eval = root.child("eval");
  std::string latent_score(to_string(c.eval.latent_score));
  eval.get("latent_score", latent_score);
  eval.finish();
  c.eval.latent_score = parse_latent_score(latent_score);

  std::string output = c.output.string();
  root.get("output", output);
  c.output = output;
  root.finish();

  c.validate();
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const auto& sp = c.data.spec;
  nlohmann::json data = {{"source", c.data.synthetic ? "synthetic" : "files"}, {"seen_holdout", c.data.seen_holdout}};
  if (c.data.synthetic) {
    data["synthetic"] = {{"classes", sp.classes},
                         {"seen", sp.seen},
                         {"attributes", sp.attributes},
                         {"image_size", sp.image_size},
                         {"samples_per_class", sp.samples_per_class},
                         {"sigma", sp.sigma},
                         {"pattern_seed", sp.pattern_seed},
                         {"group_size", sp.group_size},
                         {"structure", to_string(sp.structure)}};
  } else {
    data["files"] = {{"images", c.data.files.images.string()},
                     {"labels", c.data.files.labels.string()},
                     {"attributes", c.data.files.attributes.string()},
                     {"split", c.data.files.split.string()}};
  }
  nlohmann::json model = {{"gvse", c.model.gvse},
                          {"wiring", to_string(c.model.wiring)},
                          {"fusion", to_string(c.model.fusion)},
                          {"latent", c.model.latent},
                          {"latent_dim", c.model.latent_dim},
                          {"node_dim", c.model.node_dim},
                          {"gcn_hidden", c.model.gcn_hidden}};
  if (!c.model.blocks.empty()) {
    auto blocks = nlohmann::json::array();
    for (const auto& b : c.model.blocks) blocks.push_back({{"in", b.in_channels}, {"out", b.out_channels}, {"stride", b.stride}});
    model["blocks"] = blocks;
  }
  return {{"data", data},
          {"graph",
           {{"type", to_string(c.graph.kind)},
            {"delta", c.graph.delta},
            {"binarize", to_string(c.graph.binarize)},
            {"category_threshold", c.graph.category_threshold},
            {"self_loops", c.graph.self_loops}}},
          {"embedding", {{"d", c.embedding_dim}}},
          {"model", model},
          {"train",
           {{"lr", c.train.adam.lr},
            {"beta1", c.train.adam.beta1},
            {"beta2", c.train.adam.beta2},
            {"eps", c.train.adam.eps},
            {"batch", c.train.batch},
            {"epochs", c.train.epochs},
            {"gamma", c.train.weights.gamma},
            {"alpha", c.train.weights.alpha},
            {"bias_weight", c.train.weights.bias_weight},
            {"transductive", c.train.transductive},
            {"seed", c.train.seed}}},
          {"eval", {{"latent_score", to_string(c.eval.latent_score)}}},
          {"output", c.output.string()}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config {}: {}", path.string(), e.what()));
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace gvse
