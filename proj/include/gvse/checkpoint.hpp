#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gvse/model.hpp"

namespace gvse {

struct CheckpointHeader {
  std::uint32_t version = 0;
  std::string digest;
  std::uint64_t param_count = 0;
};

// Binary layout: "GVSC", version u32, 16-byte digest, param count u64, then per
// parameter an element count u64 and its f64 values (all little-endian).
std::vector<std::uint8_t> encode_checkpoint(const GvseModel& model, const std::string& digest);

/// Writes `path` and a JSON sidecar `path` + ".json" holding `config`.
void save_checkpoint(const GvseModel& model, const std::string& digest, const nlohmann::json& config,
                     const std::filesystem::path& path);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

/// Loads parameters into `model`. Throws ArtifactMismatch when the digest or
/// the parameter layout differs.
void load_checkpoint(GvseModel& model, const std::string& expected_digest, const std::filesystem::path& path);

}  // namespace gvse
