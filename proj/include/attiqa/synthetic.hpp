#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/image.hpp"
#include "attiqa/manifest.hpp"

namespace attiqa::synthetic {

/// Degradation factors applied to procedural content.
struct Factors {
  double blur_sigma = 0.0;
  double contrast = 1.0;
  double brightness = 1.0;
  double saturation = 1.0;
  double noise_sigma = 0.0;
};

/// Smooth colored blobs, hard-edged shapes and a mild texture.
ImageRaster base_content(std::uint64_t seed, std::size_t side);
Factors sample_factors(std::uint64_t seed);
ImageRaster render(std::uint64_t seed, std::size_t side, const Factors& factors);

/// Ground-truth quality law: a fixed positive combination of the squashed
/// analytic statistics, mapped to roughly [1, 5].
double mos_from_stats(const PerAttribute<double>& stats);

/// Undistorted procedural images used as the distortion proxy corpus.
std::vector<ImageRaster> procedural_corpus(std::size_t count, std::size_t side, std::uint64_t seed);

struct DatasetOptions {
  std::string name = "synthetic";
  std::size_t count = 100;
  std::size_t side = 64;
  std::uint64_t seed = 0;
  bool with_mos = true;
  bool with_attributes = true;
};

/// Writes <dir>/images/*.png and <dir>/<name>.jsonl; attribute annotations
/// are the analytic statistics of each rendered image.
DatasetManifest write_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

}  // namespace attiqa::synthetic
