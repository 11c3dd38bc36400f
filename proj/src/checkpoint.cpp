#include "gvse/checkpoint.hpp"

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/io.hpp"

namespace gvse {

namespace {

constexpr std::uint32_t kVersion = 1;

CheckpointHeader read_header(ByteReader& r) {
  if (r.raw(4) != "GVSC") throw ParseError("checkpoint: bad magic");
  CheckpointHeader h;
  h.version = r.u32();
  if (h.version != kVersion) throw ArtifactMismatch(fmt::format("checkpoint version {} is not supported", h.version));
  h.digest = r.raw(16);
  h.param_count = r.u64();
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const GvseModel& model, const std::string& digest) {
  if (digest.size() != 16) throw ContractError("checkpoint digest must be 16 hex digits");
  ByteWriter w;
  w.raw("GVSC");
  w.u32(kVersion);
  w.raw(digest);
  const auto params = model.parameters();
  w.u64(params.size());
  for (const auto* p : params) {
    w.u64(p->value().size());
    for (double v : p->value().values()) w.f64(v);
  }
  return std::move(w.bytes());
}

void save_checkpoint(const GvseModel& model, const std::string& digest, const nlohmann::json& config,
                     const std::filesystem::path& path) {
  write_binary_file(path, encode_checkpoint(model, digest));
  nlohmann::json layout = nlohmann::json::array();
  for (const auto* p : model.parameters()) layout.push_back({{"name", p->name()}, {"shape", p->value().shape()}});
  const nlohmann::json sidecar = {{"format_version", kVersion}, {"config_digest", digest}, {"config", config},
                                  {"parameters", layout}};
  write_text_file(path.string() + ".json", sidecar.dump(2) + "\n");
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  ByteReader r(bytes, "checkpoint " + path.string());
  return read_header(r);
}

void load_checkpoint(GvseModel& model, const std::string& expected_digest, const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  ByteReader r(bytes, "checkpoint " + path.string());
  const auto header = read_header(r);
  if (header.digest != expected_digest) {
    throw ArtifactMismatch(fmt::format("checkpoint {} was written for config {}, current config is {}", path.string(),
                                       header.digest, expected_digest));
  }
  auto params = model.parameters();
  if (header.param_count != params.size()) {
    throw ArtifactMismatch(fmt::format("checkpoint holds {} parameters, model has {}", header.param_count, params.size()));
  }
  for (auto* p : params) {
    const auto n = r.u64();
    if (n != p->value().size()) {
      throw ArtifactMismatch(fmt::format("checkpoint parameter '{}' has {} values, expected {}", p->name(), n,
                                         p->value().size()));
    }
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    p->set_value(Tensor(p->value().shape(), std::move(values)));
  }
  if (r.remaining() != 0) throw ArtifactMismatch(fmt::format("checkpoint has {} trailing bytes", r.remaining()));
}

}  // namespace gvse
