#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/manifest.hpp"
#include "attiqa/vlm.hpp"

namespace attiqa {

/// Pseudo-label for one image: five scores strictly inside (0,1).
struct AttributeScoreRecord {
  std::string image_id;
  PerAttribute<double> scores;
  std::string provider_id;
  std::string prompt_set_id;

  void validate() const;
  nlohmann::json to_json() const;
  static AttributeScoreRecord from_json(const nlohmann::json& j);
};

/// In-memory view of a JSON Lines label file.
class LabelStore {
 public:
  LabelStore() = default;
  static LabelStore load(const std::filesystem::path& path);

  const std::vector<AttributeScoreRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const AttributeScoreRecord* find(const std::string& image_id) const;
  /// Throws ValidationError when the id is missing.
  const AttributeScoreRecord& at(const std::string& image_id) const;
  void add(AttributeScoreRecord r);

 private:
  std::vector<AttributeScoreRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// File name inside `dir` reserved for one (provider, prompt set) key.
std::filesystem::path label_store_path(const std::filesystem::path& dir,
                                       std::string_view provider_id,
                                       std::string_view prompt_set_id);

struct LabelGenerationOptions {
  double temperature = 1.0;
  std::size_t jobs = 1;
};

struct LabelGenerationSummary {
  std::filesystem::path store;
  std::size_t written = 0;
  std::size_t already_present = 0;
  std::size_t unreadable = 0;
};

/// Scores every manifest image with each attribute's pair and appends one
/// record per new image to the store under `out_dir`. Existing ids are
/// skipped, so an interrupted run resumes. Text prompts are embedded once.
LabelGenerationSummary generate_labels(const DatasetManifest& manifest, const PromptSet& prompts,
                                       const EmbeddingProvider& provider,
                                       const std::filesystem::path& out_dir,
                                       const LabelGenerationOptions& options = {});

}  // namespace attiqa
