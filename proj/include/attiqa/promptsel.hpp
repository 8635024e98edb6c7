#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/distortion.hpp"
#include "attiqa/image.hpp"
#include "attiqa/manifest.hpp"
#include "attiqa/vlm.hpp"
#include "json.hpp"

namespace attiqa::promptsel {

/// Query used to obtain candidate adjective lists from a language model.
inline constexpr std::string_view kCandidateQuery =
    "Suggest 50 positive/negative adjectives about {attribute} related to image quality";

/// "[adjective] image" with the first letter upper-cased.
std::string render_prompt(std::string_view adjective);

struct PromptCandidateSet {
  Attribute attribute{};
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::string set_id;

  void validate() const;
};

struct CandidateFile {
  std::string set_id;
  PerAttribute<PromptCandidateSet> sets;
};

CandidateFile parse_candidates(const nlohmann::json& j);
CandidateFile load_candidates(const std::filesystem::path& path);

enum class SelectionMode { distortion, perception, joint };
std::string_view to_string(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view s);

struct DistortionTaskOptions {
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t jobs = 1;
};

struct PerceptionTaskOptions {
  std::size_t cap = 1000;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t jobs = 1;
};

/// Embeddings of every distorted variant of a corpus for one attribute,
/// computed once and shared by all candidate pairs.
class DistortionCorpus {
 public:
  DistortionCorpus(Attribute attribute, std::span<const ImageRaster> images,
                   const EmbeddingProvider& provider, const DistortionTaskOptions& options);

  Attribute attribute() const { return attribute_; }
  /// Mean over images of the mean over distortions of
  /// direction * SROCC(score, level). -inf if any sequence is constant.
  double evaluate(std::span<const double> positive, std::span<const double> negative) const;

 private:
  struct Series {
    int direction = 1;
    std::vector<Embedding> levels;
  };
  Attribute attribute_;
  double temperature_;
  std::vector<std::vector<Series>> per_image_;  // [image][distortion]
};

/// Images of an annotated manifest (subsampled to the cap) with their
/// human scores. Image embeddings are shared by all five attributes.
class PerceptionCorpus {
 public:
  PerceptionCorpus(const DatasetManifest& annotated, const EmbeddingProvider& provider,
                   const PerceptionTaskOptions& options);

  std::size_t size() const { return images_.size(); }
  /// SROCC between antonym scores and human scores; -inf if degenerate.
  double evaluate(Attribute attribute, std::span<const double> positive,
                  std::span<const double> negative) const;

 private:
  double temperature_;
  std::vector<Embedding> images_;
  PerAttribute<std::vector<double>> human_;
};

/// Distortion-intensity proxy task. Throws ValidationError for an empty corpus.
double proxy_distortion(const PromptPair& pair, std::span<const ImageRaster> images,
                        const EmbeddingProvider& provider, const DistortionTaskOptions& options = {});

/// Human-perception proxy task. Throws ValidationError when the manifest
/// carries no attribute annotations or cap < 2.
double proxy_perception(const PromptPair& pair, const DatasetManifest& annotated,
                        const EmbeddingProvider& provider,
                        const PerceptionTaskOptions& options = {});

struct RankedPair {
  std::string positive;  // rendered prompt
  std::string negative;
  std::optional<double> task1;
  std::optional<double> task2;
  double score = 0.0;
};

struct AttributeSelection {
  PromptPair chosen;
  std::optional<double> task1;
  std::optional<double> task2;
  double score = 0.0;  // task1, task2, or their sum depending on mode
  std::vector<RankedPair> table;  // best first
};

struct SelectionReport {
  std::string set_id;
  SelectionMode mode = SelectionMode::joint;
  PerAttribute<AttributeSelection> attributes;

  PromptSet prompt_set() const;
  nlohmann::json to_json() const;
};

struct SelectionOptions {
  SelectionMode mode = SelectionMode::joint;
  DistortionTaskOptions distortion;
  PerceptionTaskOptions perception;
};

/// Scores every rendered (positive, negative) combination per attribute and
/// keeps the argmax; ties go to the lexicographically smallest
/// (positive, negative). Each distinct prompt text is embedded once.
SelectionReport select_prompts(const CandidateFile& candidates,
                               std::span<const ImageRaster> distortion_images,
                               const DatasetManifest* annotated,
                               const EmbeddingProvider& provider,
                               const SelectionOptions& options);

}  // namespace attiqa::promptsel
