#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "attiqa/error.hpp"
#include "attiqa/parallel.hpp"
#include "attiqa/promptsel.hpp"

namespace attiqa::promptsel {

using nlohmann::json;

namespace {

json score_json(std::optional<double> v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v < 0 ? "-inf" : "inf";
  return *v;
}

bool better(const RankedPair& a, const RankedPair& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.positive != b.positive) return a.positive < b.positive;
  return a.negative < b.negative;
}

}  // namespace

PromptSet SelectionReport::prompt_set() const {
  PromptSet ps;
  ps.set_id = set_id;
  for (Attribute a : kAttributes) ps.pairs[a] = attributes[a].chosen;
  return ps;
}

json SelectionReport::to_json() const {
  json j = prompt_set().to_json();
  j["mode"] = std::string(promptsel::to_string(mode));
  json per = json::object();
  for (Attribute a : kAttributes) {
    const AttributeSelection& s = attributes[a];
    json table = json::array();
    for (const RankedPair& r : s.table) {
      table.push_back({{"positive", r.positive},
                       {"negative", r.negative},
                       {"task1_srocc", score_json(r.task1)},
                       {"task2_srocc", score_json(r.task2)},
                       {"score", score_json(r.score)}});
    }
    per[std::string(attiqa::to_string(a))] = {{"positive", s.chosen.positive},
                                              {"negative", s.chosen.negative},
                                              {"task1_srocc", score_json(s.task1)},
                                              {"task2_srocc", score_json(s.task2)},
                                              {"score", score_json(s.score)},
                                              {"table", std::move(table)}};
  }
  j["selection"] = std::move(per);
  return j;
}

SelectionReport select_prompts(const CandidateFile& candidates, std::span<const ImageRaster> distortion_images,
                               const DatasetManifest* annotated, const EmbeddingProvider& provider,
                               const SelectionOptions& options) {
  const bool need_task1 = options.mode != SelectionMode::perception;
  const bool need_task2 = options.mode != SelectionMode::distortion;
  if (distortion_images.empty() && annotated == nullptr) {
    throw ValidationError("prompt selection needs distortion images or an annotated manifest");
  }
  if (need_task1 && distortion_images.empty()) {
    throw ValidationError(std::string(to_string(options.mode)) + " mode needs distortion images");
  }
  if (need_task2 && annotated == nullptr) {
    throw ValidationError(std::string(to_string(options.mode)) + " mode needs an annotated manifest");
  }
  for (Attribute a : kAttributes) candidates.sets[a].validate();

  SelectionReport report;
  report.set_id = candidates.set_id;
  report.mode = options.mode;

  // Every distinct rendered text is embedded exactly once.
  std::map<std::string, Embedding> text;
  for (Attribute a : kAttributes) {
    for (const auto* list : {&candidates.sets[a].positives, &candidates.sets[a].negatives}) {
      for (const auto& adj : *list) text.emplace(render_prompt(adj), Embedding{});
    }
  }
  std::vector<std::map<std::string, Embedding>::iterator> slots;
  for (auto it = text.begin(); it != text.end(); ++it) slots.push_back(it);
  parallel_for(slots.size(), options.distortion.jobs,
               [&](std::size_t i) { slots[i]->second = provider.embed_text(slots[i]->first); });

  std::optional<PerceptionCorpus> perception;
  if (need_task2) perception.emplace(*annotated, provider, options.perception);

  for (Attribute a : kAttributes) {
    const PromptCandidateSet& set = candidates.sets[a];
    std::optional<DistortionCorpus> distortion;
    if (need_task1) distortion.emplace(a, distortion_images, provider, options.distortion);

    std::vector<RankedPair> table(set.positives.size() * set.negatives.size());
    parallel_for(table.size(), options.distortion.jobs, [&](std::size_t k) {
      RankedPair& r = table[k];
      r.positive = render_prompt(set.positives[k / set.negatives.size()]);
      r.negative = render_prompt(set.negatives[k % set.negatives.size()]);
      const Embedding& pos = text.at(r.positive);
      const Embedding& neg = text.at(r.negative);
      if (distortion) r.task1 = distortion->evaluate(pos, neg);
      if (perception) r.task2 = perception->evaluate(a, pos, neg);
      r.score = (r.task1 ? *r.task1 : 0.0) + (r.task2 ? *r.task2 : 0.0);
    });
    std::sort(table.begin(), table.end(), better);

    AttributeSelection& sel = report.attributes[a];
    sel.chosen = PromptPair{a, table.front().positive, table.front().negative};
    sel.task1 = table.front().task1;
    sel.task2 = table.front().task2;
    sel.score = table.front().score;
    sel.table = std::move(table);
  }
  return report;
}

}  // namespace attiqa::promptsel
