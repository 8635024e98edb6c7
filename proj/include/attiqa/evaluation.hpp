#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attiqa/config.hpp"
#include "attiqa/manifest.hpp"
#include "attiqa/model.hpp"
#include "json.hpp"

namespace attiqa::evaluation {

struct CropOffset {
  std::size_t y = 0;
  std::size_t x = 0;
  bool operator==(const CropOffset&) const = default;
};

/// Top-left, top-right, bottom-left, bottom-right, then center (floored).
std::array<CropOffset, 5> five_crop_offsets(std::size_t height, std::size_t width, std::size_t crop);

struct EvalOptions {
  bool five_crop = true;
  std::size_t resize_short = 340;
  std::size_t crop = 320;
  std::size_t jobs = 1;

  static EvalOptions from_config(const EvalConfig& c);
};

/// Mean forward_mos over the five crops of the resized image.
/// Throws ValidationError when the resized image is smaller than the crop.
double five_crop_predict(const AttributeModel& model, const ImageRaster& img,
                         std::size_t resize_short, std::size_t crop);

/// Five-crop or center-crop prediction per options.
double predict_mos(const AttributeModel& model, const ImageRaster& img, const EvalOptions& options);
PerAttribute<double> predict_attributes(const AttributeModel& model, const ImageRaster& img,
                                        const EvalOptions& options);

struct Protocol {
  std::size_t splits = 1;
  std::vector<std::uint64_t> seeds;
  bool five_crop = false;
  std::size_t crop = 0;
  std::size_t resize_short = 0;
};

struct EvalReport {
  std::string dataset;
  std::optional<double> srocc;
  std::optional<double> plcc;
  bool include_plcc = true;
  std::size_t n = 0;
  Protocol protocol;
  std::vector<double> split_srocc;
  std::vector<double> split_plcc;
  std::optional<std::string> error;
  std::vector<std::string> warnings;
  std::string trained_on;

  nlohmann::json to_json() const;
};

/// Correlations of predictions against MOS; degenerate inputs produce a
/// report with `error` set instead of values.
EvalReport evaluate_predictions(std::string dataset, std::span<const double> predictions,
                                std::span<const double> mos, const Protocol& protocol);

/// Requires every record to carry MOS and the model to have a regressor.
EvalReport evaluate(const AttributeModel& model, const DatasetManifest& manifest,
                    const EvalOptions& options, const std::vector<ImageRaster>* images = nullptr);

/// Produces a trained model from a training split and its split seed.
using TrainFn = std::function<AttributeModel(const DatasetManifest& train, std::uint64_t seed)>;

/// Ten seeded 80/20 splits; train, evaluate on the held-out part, report
/// per-split values and their medians. With SplitTagPolicy::use_official
/// the manifest's own train/test tags give a single split.
EvalReport run_protocol(const DatasetManifest& manifest, const EvalOptions& options,
                        const TrainFn& train_fn, std::uint64_t base_seed,
                        double train_fraction = 0.8,
                        SplitTagPolicy policy = SplitTagPolicy::refuse);

/// SROCC-only report on an unseen dataset. Warns (and still computes) when
/// the test manifest has the training dataset's name.
EvalReport cross_dataset(const AttributeModel& model, const std::string& train_name,
                         const DatasetManifest& test_manifest, const EvalOptions& options);

enum class Preference { A, B };

struct PairwiseEntry {
  std::string a;
  std::string b;
  Preference human = Preference::A;
};

struct PairwiseBenchmark {
  std::filesystem::path base_dir;
  std::vector<PairwiseEntry> pairs;
};

PairwiseBenchmark load_pairwise_benchmark(const std::filesystem::path& path);

struct PairwiseResult {
  double agreement = 0.0;
  std::size_t n = 0;
  std::size_t agreed = 0;
  std::size_t ties = 0;
  nlohmann::json to_json() const;
};

/// Agreement between the model's preferred member (higher MOS) and human
/// preference. Exact prediction ties count as disagreement.
PairwiseResult compare_pairs(const AttributeModel& model, const PairwiseBenchmark& benchmark,
                             const EvalOptions& options);
/// Same reduction over precomputed predictions.
PairwiseResult compare_predictions(std::span<const double> score_a, std::span<const double> score_b,
                                   std::span<const Preference> human);

}  // namespace attiqa::evaluation
