#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace attiqa {

enum class PairSampler { derangement, exhaustive };
enum class PretrainLoss { ranking, l2 };
/// `corrected` pushes the sample with the higher pseudo-label above the
/// other; `literal` composes the indicator and hinge exactly as printed.
enum class RankingOrientation { corrected, literal };
enum class LrSchedule { cosine };
enum class FinetuneLoss { squared_error, absolute_error };

struct ModelConfig {
  std::string backbone = "desk_cnn";  // or "external:<tag>"
  std::vector<int> channels{16, 32, 48, 64};
  int head_hidden = 512;
  int reg_hidden = 512;
};

struct PretrainConfig {
  int resize_short = 256;
  int crop = 224;
  int batch = 256;
  int epochs = 100;
  double lr = 1e-4;
  double weight_decay = 0.01;
  std::vector<int> lr_milestones{60, 80};
  double lr_decay = 0.1;
  double margin = 0.1;
  PairSampler pair_sampler = PairSampler::derangement;
  PretrainLoss loss = PretrainLoss::ranking;
  RankingOrientation orientation = RankingOrientation::corrected;
  int checkpoint_every = 0;  // 0: final checkpoint only
};

struct FinetuneConfig {
  int resize_short = 340;
  int crop = 320;
  int batch = 64;
  int epochs = 100;
  double lr = 1e-5;
  /// Per-dataset overrides keyed by lower-case manifest name.
  std::map<std::string, double> lr_by_dataset{{"clive", 1e-4}, {"koniq", 5e-5}};
  double weight_decay = 0.01;
  LrSchedule schedule = LrSchedule::cosine;
  bool linear_probe = false;
  bool freeze_backbone = false;
  FinetuneLoss loss = FinetuneLoss::squared_error;
};

struct EvalConfig {
  bool five_crop = true;
  int resize_short = 340;
  int crop = 320;
};

struct ScoringConfig {
  double temperature = 1.0;
};

struct SelectionConfig {
  std::string mode = "joint";
  int corpus_size = 20;
  int perception_cap = 1000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  EvalConfig eval;
  ScoringConfig scoring;
  SelectionConfig selection;

  /// Full-scale recipe (ResNet-50 slot, 224/320 crops, 100 epochs).
  static RunConfig full();
  /// Single-CPU recipe for 64x64 synthetic data.
  static RunConfig desk();

  /// Missing keys keep the `base` value; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j, const RunConfig& base = RunConfig::full());
  nlohmann::json to_json() const;
  /// Throws ValidationError when an invariant fails.
  void validate() const;
  /// SHA-256 of the canonical JSON dump.
  std::string hash() const;

  double finetune_lr_for(std::string_view dataset_name) const;
};

/// Reads a RunConfig document. A top-level "preset": "desk"|"full" key
/// selects the base that the remaining keys override.
RunConfig load_run_config(const std::filesystem::path& path);

std::string_view to_string(PairSampler v);
std::string_view to_string(PretrainLoss v);
std::string_view to_string(RankingOrientation v);
std::string_view to_string(LrSchedule v);
std::string_view to_string(FinetuneLoss v);

}  // namespace attiqa
