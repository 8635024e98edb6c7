#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attiqa/checkpoint.hpp"
#include "attiqa/config.hpp"
#include "attiqa/label_store.hpp"
#include "attiqa/manifest.hpp"
#include "attiqa/model.hpp"

namespace attiqa::training {

/// 0 when s1 > s2, 1 when s1 <= s2 (ties map to 1).
int indicator(double s1, double s2);

struct PairLoss {
  double value = 0.0;
  PerAttribute<double> d_pred1;
  PerAttribute<double> d_pred2;
};

/// Sum over attributes of the margin hinge. With the corrected orientation
/// the sample holding the strictly larger pseudo-label must lead by `margin`
/// and tied labels contribute nothing; the literal orientation evaluates
/// max(0, m - (E(x1) - E(x2))) * indicator(s1, s2).
PairLoss pair_ranking_loss_grad(const PerAttribute<double>& pred1, const PerAttribute<double>& pred2,
                                const PerAttribute<double>& label1, const PerAttribute<double>& label2,
                                double margin,
                                RankingOrientation orientation = RankingOrientation::corrected);

double pair_ranking_loss(const PerAttribute<double>& pred1, const PerAttribute<double>& pred2,
                         const PerAttribute<double>& label1, const PerAttribute<double>& label2,
                         double margin,
                         RankingOrientation orientation = RankingOrientation::corrected);

struct PointLoss {
  double value = 0.0;
  PerAttribute<double> d_pred;
};

/// Sum over attributes of squared error against the pseudo-labels.
PointLoss l2_pretrain_loss_grad(const PerAttribute<double>& pred, const PerAttribute<double>& label);
double l2_pretrain_loss(const PerAttribute<double>& pred, const PerAttribute<double>& label);

/// Pair of positions inside one batch.
struct IndexPair {
  std::size_t first = 0;
  std::size_t second = 0;
  bool operator==(const IndexPair&) const = default;
};

/// derangement: B ordered pairs (i, p(i)) with p a seeded single-cycle
/// permutation; exhaustive: all B(B-1)/2 unordered pairs.
/// Throws ValidationError when batch_size < 2.
std::vector<IndexPair> sample_pairs(std::size_t batch_size, std::uint64_t seed, PairSampler sampler);

/// Adaptive moment estimation with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(std::size_t parameter_count, double beta1 = 0.9, double beta2 = 0.999,
                 double epsilon = 1e-8);
  /// Updates params[r] for every range in `ranges`.
  void step(std::span<double> params, std::span<const double> grad, double lr, double weight_decay,
            std::span<const ParamRange> ranges);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Base rate times decay^(number of milestones <= epoch); epochs are 0-based.
double milestone_lr(double base, std::span<const int> milestones, double decay, int epoch);
/// Half-cosine from base to 0 over total_steps.
double cosine_lr(double base, std::size_t step, std::size_t total_steps);

/// Shorter-edge resize already applied; uniform crop position.
ImageRaster random_crop(const ImageRaster& img, std::size_t side, std::mt19937_64& rng);

struct LossRow {
  std::size_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainOptions {
  std::size_t jobs = 1;
  std::string provider_id;
  std::string prompt_set_id;
  std::ostream* log = nullptr;
  /// Preloaded images keyed by manifest position; loaded from disk if empty.
  std::vector<ImageRaster> images;
};

struct TrainResult {
  AttributeModel model;
  CheckpointManifest manifest;
  std::vector<LossRow> history;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

/// Attribute pretraining against pseudo-labels. When `out_dir` is non-empty
/// writes final/ (and epoch-NNN/ every checkpoint_every epochs) plus
/// loss_history.csv. Throws ValidationError for missing labels and Error
/// when the loss becomes non-finite.
TrainResult pretrain(const DatasetManifest& manifest, const LabelStore& labels,
                     const RunConfig& config, const std::filesystem::path& out_dir,
                     const TrainOptions& options = {});

/// MOS fine-tuning over concatenated head features. Keeps the checkpoint's
/// regressor if present, otherwise attaches one. linear_probe trains only
/// the regressor; freeze_backbone keeps the backbone fixed.
TrainResult finetune(const Checkpoint& start, const DatasetManifest& manifest, const RunConfig& config,
                     const std::filesystem::path& out_dir, const TrainOptions& options = {});

void write_loss_history(const std::vector<LossRow>& rows, const std::filesystem::path& path);

}  // namespace attiqa::training
