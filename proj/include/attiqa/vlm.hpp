#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/image.hpp"
#include "json.hpp"

namespace attiqa {

using Embedding = std::vector<double>;

/// Image/text encoder pair sharing one embedding space. Implementations
/// return unit-norm vectors of length dim(), are deterministic per input
/// and must tolerate concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Embedding embed_image(const ImageRaster& img) const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
};

/// Throws ValidationError on length mismatch, empty or zero-norm input.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Two-way softmax of relatedness scores: exp(p/t) / (exp(p/t) + exp(n/t)).
/// Throws ValidationError for non-finite input or non-positive temperature.
double antonym_score(double s_pos, double s_neg, double temperature = 1.0);

struct PromptPair {
  Attribute attribute{};
  std::string positive;
  std::string negative;

  void validate() const;
  bool operator==(const PromptPair&) const = default;
};

/// One antonym pair per attribute plus an identifier for label provenance.
struct PromptSet {
  std::string set_id;
  PerAttribute<PromptPair> pairs;

  void validate() const;
  nlohmann::json to_json() const;
  /// Accepts {"set_id", "pairs": {attr: {"positive","negative"}}}, which is
  /// also the prefix of a prompt-selection report.
  static PromptSet from_json(const nlohmann::json& j);
};

PromptSet load_prompt_set(const std::filesystem::path& path);

/// Antonym score of a precomputed image embedding against two text embeddings.
double score_embedding(std::span<const double> image, std::span<const double> positive,
                       std::span<const double> negative, double temperature = 1.0);

double score_image(const ImageRaster& img, const PromptPair& pair,
                   const EmbeddingProvider& provider, double temperature = 1.0);

/// Pixel statistics, one per attribute: luma gradient magnitude, luma std,
/// mean luma, opponent-channel colourfulness, and negated mean absolute
/// Laplacian (cleanliness).
PerAttribute<double> analytic_stats(const ImageRaster& img);

/// Deterministic stand-in for a vision-language model. Images embed to a
/// normalized linear map of squashed analytic statistics plus a constant
/// content channel; a small vocabulary of planted adjectives embeds along
/// the matching attribute axis, everything else to a seeded random vector.
class AnalyticMockProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDim = 32;
  static constexpr std::string_view kId = "analytic-mock";

  AnalyticMockProvider();

  std::string id() const override { return std::string(kId); }
  std::size_t dim() const override { return kDim; }
  Embedding embed_image(const ImageRaster& img) const override;
  Embedding embed_text(std::string_view text) const override;

  /// tanh of the statistics standardized by fixed reference moments.
  static PerAttribute<double> latent(const PerAttribute<double>& stats);

  /// The planted (positive, negative) adjectives for each attribute.
  static PerAttribute<std::pair<std::string, std::string>> planted_adjectives();
  static PromptSet planted_prompt_set();

 private:
  std::vector<Embedding> axes_;  // orthonormal: five attributes + content
};

/// Wraps a provider with a content-addressed on-disk cache:
/// <dir>/<sanitized provider id>/<sha256 of input>.bin
class CachingProvider final : public EmbeddingProvider {
 public:
  CachingProvider(std::unique_ptr<EmbeddingProvider> inner, std::filesystem::path dir);

  std::string id() const override { return inner_->id(); }
  std::size_t dim() const override { return inner_->dim(); }
  Embedding embed_image(const ImageRaster& img) const override;
  Embedding embed_text(std::string_view text) const override;

 private:
  Embedding lookup_or_compute(const std::string& key, const auto& compute) const;

  std::unique_ptr<EmbeddingProvider> inner_;
  std::filesystem::path dir_;
};

/// Client for an external embedding service speaking a small JSON protocol:
///   POST {base}/embed/text  {"model": tag, "text": str}
///   POST {base}/embed/image {"model": tag, "height": H, "width": W, "pixels": [..]}
/// Both answer {"embedding": [..]}. Vectors are re-normalized client side.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, std::string model_tag);

  std::string id() const override { return "external-vlm:" + tag_; }
  std::size_t dim() const override;
  Embedding embed_image(const ImageRaster& img) const override;
  Embedding embed_text(std::string_view text) const override;

 private:
  Embedding post(const std::string& route, const nlohmann::json& body) const;

  std::string base_url_;
  std::string tag_;
  mutable std::atomic<std::size_t> dim_{0};
};

/// Resolves "analytic-mock" or "external-vlm:<tag>" (service URL from
/// ATTIQA_VLM_URL). Wraps the result in a CachingProvider when ATTIQA_CACHE
/// is set. Throws ValidationError for unknown ids.
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view provider_id);

/// L2-normalizes in place. Throws ProviderError for zero or non-finite vectors.
void normalize_embedding(Embedding& v);

}  // namespace attiqa
