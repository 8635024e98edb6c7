#include "attiqa/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "json.hpp"

namespace attiqa {

using nlohmann::json;

bool DatasetManifest::has_split_tags() const {
  return std::any_of(records.begin(), records.end(), [](const auto& r) { return r.split_tag.has_value(); });
}

bool DatasetManifest::all_have_mos() const {
  return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.mos.has_value(); });
}

bool DatasetManifest::all_have_attribute_scores() const {
  return std::all_of(records.begin(), records.end(),
                     [](const auto& r) { return r.attribute_scores.has_value(); });
}

std::filesystem::path DatasetManifest::resolve(const ManifestRecord& r) const {
  std::filesystem::path p(r.path);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (r.image_id.empty()) throw ValidationError("record with empty image_id");
    if (!seen.insert(r.image_id).second) {
      throw ValidationError("duplicate image_id \"" + r.image_id + "\"");
    }
    if (r.mos && !std::isfinite(*r.mos)) {
      throw ValidationError("non-finite mos for \"" + r.image_id + "\"");
    }
    if (r.attribute_scores) {
      for (double v : *r.attribute_scores) {
        if (!std::isfinite(v)) throw ValidationError("non-finite attribute score for \"" + r.image_id + "\"");
      }
    }
    if (r.split_tag && *r.split_tag != "train" && *r.split_tag != "test") {
      throw ValidationError("split tag must be \"train\" or \"test\", got \"" + *r.split_tag + "\"");
    }
  }
}

namespace {

ManifestRecord parse_record(const json& j, std::size_t line_no) {
  const auto where = " (line " + std::to_string(line_no) + ")";
  if (!j.is_object()) throw ValidationError("manifest record is not an object" + where);
  static const std::unordered_set<std::string> kKeys = {"image_id", "path", "mos", "attributes", "split"};
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.count(k)) throw ValidationError("unknown manifest key \"" + k + "\"" + where);
  }
  ManifestRecord r;
  if (!j.contains("image_id") || !j["image_id"].is_string()) {
    throw ValidationError("missing string image_id" + where);
  }
  r.image_id = j["image_id"].get<std::string>();
  if (!j.contains("path") || !j["path"].is_string()) throw ValidationError("missing string path" + where);
  r.path = j["path"].get<std::string>();
  if (j.contains("mos") && !j["mos"].is_null()) {
    if (!j["mos"].is_number()) throw ValidationError("mos must be a number" + where);
    r.mos = j["mos"].get<double>();
  }
  if (j.contains("attributes") && !j["attributes"].is_null()) {
    const auto& a = j["attributes"];
    if (!a.is_object()) throw ValidationError("attributes must be an object" + where);
    PerAttribute<double> scores;
    std::size_t found = 0;
    for (const auto& [k, v] : a.items()) {
      const auto attr = try_parse_attribute(k);
      if (!attr) throw ValidationError("unknown attribute \"" + k + "\"" + where);
      if (!v.is_number()) throw ValidationError("attribute score must be a number" + where);
      scores[*attr] = v.get<double>();
      ++found;
    }
    if (found != kNumAttributes) {
      throw ValidationError("partial attribute scores for \"" + r.image_id + "\"" + where);
    }
    r.attribute_scores = scores;
  }
  if (j.contains("split") && !j["split"].is_null()) {
    if (!j["split"].is_string()) throw ValidationError("split must be a string" + where);
    r.split_tag = j["split"].get<std::string>();
  }
  return r;
}

json record_to_json(const ManifestRecord& r) {
  json j;
  j["image_id"] = r.image_id;
  j["path"] = r.path;
  j["mos"] = r.mos ? json(*r.mos) : json(nullptr);
  if (r.attribute_scores) {
    json a = json::object();
    for (Attribute attr : kAttributes) a[std::string(to_string(attr))] = (*r.attribute_scores)[attr];
    j["attributes"] = a;
  } else {
    j["attributes"] = nullptr;
  }
  j["split"] = r.split_tag ? json(*r.split_tag) : json(nullptr);
  return j;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view jsonl, std::string name, std::filesystem::path base_dir) {
  DatasetManifest m;
  m.name = std::move(name);
  m.base_dir = std::move(base_dir);
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("manifest parse error (line " + std::to_string(line_no) + "): " + e.what());
    }
    m.records.push_back(parse_record(j, line_no));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.stem().string(), path.parent_path());
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << serialize_manifest(m);
}

ImageRaster load_record_image(const DatasetManifest& m, const ManifestRecord& r) {
  return load_png(m.resolve(r), r.image_id);
}

DatasetSplit split_dataset(const DatasetManifest& m, double train_fraction, std::uint64_t seed,
                           SplitTagPolicy policy) {
  if (m.empty()) throw ValidationError("cannot split an empty manifest");
  DatasetSplit out;
  out.train.name = m.name;
  out.test.name = m.name;
  out.train.base_dir = m.base_dir;
  out.test.base_dir = m.base_dir;

  if (policy == SplitTagPolicy::use_official) {
    for (const auto& r : m.records) {
      if (!r.split_tag) throw ValidationError("record \"" + r.image_id + "\" has no split tag");
      (*r.split_tag == "train" ? out.train : out.test).records.push_back(r);
    }
    return out;
  }
  if (policy == SplitTagPolicy::refuse && m.has_split_tags()) {
    throw ValidationError("manifest carries official split tags; use them or override explicitly");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0,1)");
  }
  const std::size_t n = m.size();
  // Small slack so e.g. 0.29 * 100 lands on 29 rather than 28.
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.train : out.test).records.push_back(m.records[i]);
  }
  return out;
}

std::vector<std::uint64_t> ten_split_seeds(std::uint64_t base_seed) {
  std::vector<std::uint64_t> seeds;
  std::uint64_t state = base_seed;
  while (seeds.size() < 10) {
    const std::uint64_t s = splitmix64(state);
    if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(s);
  }
  return seeds;
}

}  // namespace attiqa
