#include "attiqa/label_store.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>

#include "attiqa/error.hpp"
#include "attiqa/parallel.hpp"

namespace attiqa {

using nlohmann::json;

void AttributeScoreRecord::validate() const {
  if (image_id.empty()) throw ValidationError("label record with empty image_id");
  for (Attribute a : kAttributes) {
    const double v = scores[a];
    if (!std::isfinite(v) || v <= 0.0 || v >= 1.0) {
      throw ValidationError("label for \"" + image_id + "\" has " + std::string(to_string(a)) +
                            " score outside (0,1)");
    }
  }
}

json AttributeScoreRecord::to_json() const {
  json j;
  j["image_id"] = image_id;
  for (Attribute a : kAttributes) j[std::string(to_string(a))] = scores[a];
  j["provider"] = provider_id;
  j["prompt_set"] = prompt_set_id;
  return j;
}

AttributeScoreRecord AttributeScoreRecord::from_json(const json& j) {
  AttributeScoreRecord r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    for (Attribute a : kAttributes) r.scores[a] = j.at(std::string(to_string(a))).get<double>();
    r.provider_id = j.at("provider").get<std::string>();
    r.prompt_set_id = j.at("prompt_set").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed label record: ") + e.what());
  }
  r.validate();
  return r;
}

LabelStore LabelStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label store " + path.string());
  LabelStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      store.add(AttributeScoreRecord::from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError("label store parse error (line " + std::to_string(line_no) + "): " + e.what());
    }
  }
  return store;
}

const AttributeScoreRecord* LabelStore::find(const std::string& image_id) const {
  const auto it = index_.find(image_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const AttributeScoreRecord& LabelStore::at(const std::string& image_id) const {
  if (const auto* r = find(image_id)) return *r;
  throw ValidationError("no label for image \"" + image_id + "\"");
}

void LabelStore::add(AttributeScoreRecord r) {
  if (index_.count(r.image_id)) throw ValidationError("duplicate label for \"" + r.image_id + "\"");
  index_.emplace(r.image_id, records_.size());
  records_.push_back(std::move(r));
}

std::filesystem::path label_store_path(const std::filesystem::path& dir, std::string_view provider_id,
                                       std::string_view prompt_set_id) {
  const auto clean = [](std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
    return out;
  };
  return dir / ("labels__" + clean(provider_id) + "__" + clean(prompt_set_id) + ".jsonl");
}

LabelGenerationSummary generate_labels(const DatasetManifest& manifest, const PromptSet& prompts,
                                       const EmbeddingProvider& provider, const std::filesystem::path& out_dir,
                                       const LabelGenerationOptions& options) {
  prompts.validate();
  LabelGenerationSummary summary;
  std::filesystem::create_directories(out_dir);
  summary.store = label_store_path(out_dir, provider.id(), prompts.set_id);

  LabelStore existing;
  if (std::filesystem::exists(summary.store)) {
    existing = LabelStore::load(summary.store);
    for (const auto& r : existing.records()) {
      if (r.provider_id != provider.id() || r.prompt_set_id != prompts.set_id) {
        throw ValidationError("label store " + summary.store.string() + " holds records for another provider/prompt set");
      }
    }
  }

  PerAttribute<std::pair<Embedding, Embedding>> text;
  for (Attribute a : kAttributes) {
    text[a] = {provider.embed_text(prompts.pairs[a].positive), provider.embed_text(prompts.pairs[a].negative)};
  }

  std::vector<const ManifestRecord*> todo;
  for (const auto& r : manifest.records) {
    if (existing.find(r.image_id)) {
      ++summary.already_present;
    } else {
      todo.push_back(&r);
    }
  }

  std::ofstream out(summary.store, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to " + summary.store.string());

  constexpr std::size_t kChunk = 64;
  for (std::size_t lo = 0; lo < todo.size(); lo += kChunk) {
    const std::size_t hi = std::min(todo.size(), lo + kChunk);
    std::vector<std::optional<AttributeScoreRecord>> results(hi - lo);
    std::vector<std::string> failures(hi - lo);
    parallel_for(hi - lo, options.jobs, [&](std::size_t k) {
      const ManifestRecord& rec = *todo[lo + k];
      ImageRaster img;
      try {
        img = load_record_image(manifest, rec);
      } catch (const Error& e) {
        failures[k] = e.what();
        return;
      }
      const Embedding e = provider.embed_image(img);
      AttributeScoreRecord r;
      r.image_id = rec.image_id;
      r.provider_id = provider.id();
      r.prompt_set_id = prompts.set_id;
      for (Attribute a : kAttributes) {
        r.scores[a] = score_embedding(e, text[a].first, text[a].second, options.temperature);
      }
      r.validate();
      results[k] = std::move(r);
    });
    // Single writer, manifest order.
    for (std::size_t k = 0; k < results.size(); ++k) {
      if (results[k]) {
        out << results[k]->to_json().dump() << '\n';
        ++summary.written;
      } else {
        std::cerr << "warning: skipping unreadable image \"" << todo[lo + k]->image_id << "\": " << failures[k]
                  << '\n';
        ++summary.unreadable;
      }
    }
    out.flush();
  }
  return summary;
}

}  // namespace attiqa
