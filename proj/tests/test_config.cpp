#include <doctest.h>

#include <fstream>

#include "gvse/checkpoint.hpp"
#include "gvse/config.hpp"
#include "gvse/error.hpp"
#include "gvse/io.hpp"
#include "gvse/pipeline.hpp"
#include "support.hpp"

using namespace gvse;
using namespace gvse::testing;
using nlohmann::json;

TEST_CASE("defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.graph.delta == 0.75);
  CHECK(c.embedding_dim == 10);
  CHECK(c.train.weights.gamma == 0.5);
  CHECK(c.train.weights.alpha == 1.0);
  CHECK(c.train.weights.bias_weight == 1.0);
  CHECK(c.train.adam.lr == 1e-3);
  CHECK(c.train.batch == 32);
  CHECK(c.model.gcn_hidden == 64);
  CHECK(c.data.synthetic);
  CHECK(c.data.spec.classes == 12);
  CHECK(c.data.spec.seen == 8);
  CHECK(c.data.spec.sigma == 0.1);
  CHECK(c.eval.latent_score == LatentScore::Distance);
}

TEST_CASE("rejections") {
  auto message = [](const json& j) {
    try {
      config_from_json(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message({{"graph", {{"dleta", 0.5}}}}).find("graph.dleta") != std::string::npos);
  CHECK(message({{"outptu", "x"}}).find("outptu") != std::string::npos);
  CHECK(message({{"model", {{"blocks", {{{"in", 3}, {"out", 4}, {"stide", 1}}}}}}}).find("stide") != std::string::npos);
  CHECK(message({{"graph", {{"delta", "high"}}}}).find("wrong type") != std::string::npos);
  CHECK(message({{"graph", {{"delta", 1.5}}}}) != "accepted");
  CHECK(message({{"train", {{"gamma", -0.1}}}}) != "accepted");
  CHECK(message({{"train", {{"batch", 1}}}}) != "accepted");
  CHECK(message({{"graph", {{"type", "knn"}}}}) != "accepted");
  CHECK(message({{"data", {{"source", "web"}}}}) != "accepted");
  CHECK(message({{"model", {{"fusion", "max"}}}}) != "accepted");
  CHECK(message({{"data", {{"source", "files"}}}}) != "accepted");
  CHECK(message({{"graph", {{"delta", 1.0}}}}) == "accepted");
}

TEST_CASE("round trip and digest") {
  auto c = tiny_experiment();
  c.output = "somewhere";
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.digest() == c.digest());
  CHECK(c.digest().size() == 16);

  auto moved = c;
  moved.output = "elsewhere";
  CHECK(moved.digest() == c.digest());
  auto changed = c;
  changed.graph.delta = 0.25;
  CHECK(changed.digest() != c.digest());
}

TEST_CASE("file paths resolve against the config directory") {
  const auto dir = temp_dir("config_paths");
  {
    std::ofstream out(dir / "cfg.json");
    out << json{{"data",
                 {{"source", "files"},
                  {"files", {{"images", "d/i.bin"}, {"labels", "d/l.bin"}, {"attributes", "/abs/a.csv"}, {"split", "s.json"}}}}}}
               .dump();
  }
  const auto c = load_config(dir / "cfg.json");
  CHECK(c.data.files.images == dir / "d/i.bin");
  CHECK(c.data.files.attributes == std::filesystem::path("/abs/a.csv"));
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = temp_dir("checkpoint");
  GvseModel a(tiny_model_config(), tiny_propagation(), 1);
  GvseModel b(tiny_model_config(), tiny_propagation(), 2);
  save_checkpoint(a, "0123456789abcdef", json{{"k", 1}}, dir / "c.bin");
  CHECK(std::filesystem::exists(dir / "c.bin.json"));
  const auto header = read_checkpoint_header(dir / "c.bin");
  CHECK(header.digest == "0123456789abcdef");
  CHECK(header.param_count == a.parameters().size());

  load_checkpoint(b, "0123456789abcdef", dir / "c.bin");
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value() == pb[i]->value());
  CHECK(encode_checkpoint(a, "0123456789abcdef") == encode_checkpoint(b, "0123456789abcdef"));

  CHECK_THROWS_AS(load_checkpoint(b, "fedcba9876543210", dir / "c.bin"), ArtifactMismatch);
  auto other = tiny_model_config();
  other.latent = false;
  GvseModel c(other, tiny_propagation(), 1);
  CHECK_THROWS_AS(load_checkpoint(c, "0123456789abcdef", dir / "c.bin"), ArtifactMismatch);
  {
    std::ofstream out(dir / "c.bin", std::ios::app | std::ios::binary);
    out << 'x';
  }
  CHECK_THROWS_AS(load_checkpoint(b, "0123456789abcdef", dir / "c.bin"), ArtifactMismatch);
}

TEST_CASE("zero epochs keep the initial weights") {
  auto cfg = tiny_experiment();
  cfg.train.epochs = 0;
  auto run = prepare_run(cfg);
  const auto init = encode_checkpoint(run.model, cfg.digest());
  CHECK(train_run(run).empty());
  CHECK(encode_checkpoint(run.model, cfg.digest()) == init);
  auto fresh = prepare_run(cfg);
  CHECK(encode_checkpoint(fresh.model, cfg.digest()) == init);
}

TEST_CASE("ablation arms") {
  const auto base = tiny_experiment();
  auto names = [&](std::string_view axis) {
    std::vector<std::string> out;
    for (const auto& a : ablation_arms(base, axis)) out.push_back(a.name);
    return out;
  };
  CHECK(names("delta") == std::vector<std::string>{"delta=0.25", "delta=0.50", "delta=0.75"});
  CHECK(names("fusion") == std::vector<std::string>{"concat", "sum"});
  CHECK(names("gvse-on-off").size() == 2);
  CHECK(names("wiring").size() == 3);
  CHECK(names("graph-type") == std::vector<std::string>{"attribute", "category"});
  CHECK(names("gamma").size() == 5);
  CHECK_THROWS_AS(ablation_arms(base, "dropout"), ConfigError);
  for (const auto& a : ablation_arms(base, "delta")) CHECK(a.config.train.seed == base.train.seed);
  const auto arms = ablation_arms(base, "delta");
  CHECK(arms[0].config.graph.delta == 0.25);

  CHECK(ablation_csv_header() == "arm,acc,acc_s,acc_u,h,wall_ms,error");
  AblationRow row;
  row.arm = "x";
  row.error = "bad, worse";
  CHECK(ablation_csv_row(row).find("bad, worse") == std::string::npos);
}

TEST_CASE("category graph runs end to end") {
  auto cfg = tiny_experiment();
  cfg.graph.kind = GraphKind::Category;
  cfg.train.epochs = 1;
  auto run = prepare_run(cfg);
  CHECK(run.graph.num_vertices() == 6);
  train_run(run);
  const auto m = evaluate_run(run, Setting::Gzsl);
  CHECK(m.acc_s >= 0.0);
  CHECK(m.h <= 1.0);
}
