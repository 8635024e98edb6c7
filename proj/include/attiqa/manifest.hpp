#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/image.hpp"

namespace attiqa {

struct ManifestRecord {
  std::string image_id;
  std::string path;
  std::optional<double> mos;
  std::optional<PerAttribute<double>> attribute_scores;
  std::optional<std::string> split_tag;  // "train" | "test"

  bool operator==(const ManifestRecord&) const = default;
};

/// A dataset listing. Relative record paths resolve against `base_dir`.
struct DatasetManifest {
  std::string name;
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool has_split_tags() const;
  bool all_have_mos() const;
  bool all_have_attribute_scores() const;

  std::filesystem::path resolve(const ManifestRecord& r) const;
  /// Throws ValidationError on duplicate ids, non-finite MOS or bad split tags.
  void validate() const;
};

/// JSON Lines reader. The manifest name defaults to the file stem and the
/// base directory to the file's parent.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view jsonl, std::string name,
                               std::filesystem::path base_dir);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& m);

ImageRaster load_record_image(const DatasetManifest& m, const ManifestRecord& r);

enum class SplitTagPolicy {
  refuse,        // error if any record carries a split tag
  use_official,  // partition by split tags; fraction and seed unused
  ignore,        // random split even though tags are present
};

struct DatasetSplit {
  DatasetManifest train;
  DatasetManifest test;
};

/// Seeded uniform partition with |train| = floor(fraction * N). Both halves
/// keep the manifest's record order.
DatasetSplit split_dataset(const DatasetManifest& m, double train_fraction, std::uint64_t seed,
                           SplitTagPolicy policy = SplitTagPolicy::refuse);

/// Ten distinct seeds derived from `base_seed` by a splitmix64 walk.
std::vector<std::uint64_t> ten_split_seeds(std::uint64_t base_seed);

}  // namespace attiqa
