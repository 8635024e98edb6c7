#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attiqa/model.hpp"
#include "json.hpp"

namespace attiqa {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

/// Human-readable sidecar stored as manifest.json beside weights.bin.
struct CheckpointManifest {
  std::uint32_t format_version = kWeightsFormatVersion;
  std::string stage;  // "init" | "pretrain" | "finetune"
  std::string config_hash;
  std::string provider_id;
  std::string prompt_set_id;
  std::string dataset;
  int epoch = 0;
  std::uint64_t seed = 0;
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> attribute_order;
  std::string weights_sha256;

  nlohmann::json to_json() const;
  static CheckpointManifest from_json(const nlohmann::json& j);
};

struct Checkpoint {
  AttributeModel model;
  CheckpointManifest manifest;
};

/// Writes <dir>/manifest.json and <dir>/weights.bin through a temporary
/// sibling directory that is renamed into place.
void save_checkpoint(const AttributeModel& model, CheckpointManifest manifest,
                     const std::filesystem::path& dir);

/// Throws CheckpointError on missing files, version mismatch, checksum
/// failure or a non-canonical attribute order.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace attiqa
