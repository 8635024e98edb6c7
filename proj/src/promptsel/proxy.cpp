#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/metrics.hpp"
#include "attiqa/parallel.hpp"
#include "attiqa/promptsel.hpp"

namespace attiqa::promptsel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double srocc_or_neg_inf(std::span<const double> x, std::span<const double> y) {
  try {
    return metrics::srocc(x, y).value;
  } catch (const DegenerateInputError&) {
    return kNegInf;
  }
}

}  // namespace

DistortionCorpus::DistortionCorpus(Attribute attribute, std::span<const ImageRaster> images,
                                   const EmbeddingProvider& provider, const DistortionTaskOptions& options)
    : attribute_(attribute), temperature_(options.temperature) {
  if (images.empty()) throw ValidationError("distortion task needs at least one image");
  const auto kinds = distortions_for_attribute(attribute);
  if (kinds.empty()) throw ValidationError("no distortion mapped to " + std::string(to_string(attribute)));
  per_image_.resize(images.size());
  parallel_for(images.size(), options.jobs, [&](std::size_t i) {
    auto& row = per_image_[i];
    row.reserve(kinds.size());
    for (DistortionKind kind : kinds) {
      const DistortionSchedule schedule = default_schedule(kind);
      // Same noise pattern at every level so only the intensity changes.
      const std::uint64_t seed = mix_seed(mix_seed(options.seed, i), static_cast<std::uint64_t>(kind));
      Series s;
      s.direction = schedule.expected_direction;
      for (std::size_t l = 0; l < schedule.levels(); ++l) {
        s.levels.push_back(provider.embed_image(apply_distortion(images[i], schedule, l, seed)));
      }
      row.push_back(std::move(s));
    }
  });
}

double DistortionCorpus::evaluate(std::span<const double> positive, std::span<const double> negative) const {
  double total = 0.0;
  for (const auto& row : per_image_) {
    double image_sum = 0.0;
    for (const Series& s : row) {
      std::vector<double> scores;
      std::vector<double> level;
      for (std::size_t l = 0; l < s.levels.size(); ++l) {
        scores.push_back(score_embedding(s.levels[l], positive, negative, temperature_));
        level.push_back(static_cast<double>(l));
      }
      const double r = srocc_or_neg_inf(scores, level);
      if (r == kNegInf) return kNegInf;
      image_sum += s.direction * r;
    }
    total += image_sum / static_cast<double>(row.size());
  }
  return total / static_cast<double>(per_image_.size());
}

PerceptionCorpus::PerceptionCorpus(const DatasetManifest& annotated, const EmbeddingProvider& provider,
                                   const PerceptionTaskOptions& options)
    : temperature_(options.temperature) {
  if (options.cap < 2) throw ValidationError("perception cap must be at least 2");
  if (annotated.records.empty() || !annotated.all_have_attribute_scores()) {
    throw ValidationError("perception task needs a manifest with attribute annotations on every record");
  }
  std::vector<std::size_t> idx(annotated.records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() > options.cap) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(options.cap);
    std::sort(idx.begin(), idx.end());
  }
  images_.resize(idx.size());
  parallel_for(idx.size(), options.jobs, [&](std::size_t k) {
    images_[k] = provider.embed_image(load_record_image(annotated, annotated.records[idx[k]]));
  });
  for (std::size_t k : idx) {
    const auto& scores = *annotated.records[k].attribute_scores;
    for (Attribute a : kAttributes) human_[a].push_back(scores[a]);
  }
}

double PerceptionCorpus::evaluate(Attribute attribute, std::span<const double> positive,
                                  std::span<const double> negative) const {
  std::vector<double> scores;
  scores.reserve(images_.size());
  for (const auto& e : images_) scores.push_back(score_embedding(e, positive, negative, temperature_));
  return srocc_or_neg_inf(scores, human_[attribute]);
}

double proxy_distortion(const PromptPair& pair, std::span<const ImageRaster> images,
                        const EmbeddingProvider& provider, const DistortionTaskOptions& options) {
  pair.validate();
  const DistortionCorpus corpus(pair.attribute, images, provider, options);
  return corpus.evaluate(provider.embed_text(pair.positive), provider.embed_text(pair.negative));
}

double proxy_perception(const PromptPair& pair, const DatasetManifest& annotated,
                        const EmbeddingProvider& provider, const PerceptionTaskOptions& options) {
  pair.validate();
  const PerceptionCorpus corpus(annotated, provider, options);
  return corpus.evaluate(pair.attribute, provider.embed_text(pair.positive), provider.embed_text(pair.negative));
}

}  // namespace attiqa::promptsel
