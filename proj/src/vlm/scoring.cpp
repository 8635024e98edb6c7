#include <cmath>
#include <fstream>
#include <string>

#include "attiqa/error.hpp"
#include "attiqa/vlm.hpp"

namespace attiqa {

using nlohmann::json;

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("cosine_similarity: length mismatch");
  if (u.empty()) throw ValidationError("cosine_similarity: empty vectors");
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine_similarity: zero-norm vector");
  const double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  if (!std::isfinite(c)) throw ValidationError("cosine_similarity: non-finite input");
  return std::clamp(c, -1.0, 1.0);
}

double antonym_score(double s_pos, double s_neg, double temperature) {
  if (!std::isfinite(s_pos) || !std::isfinite(s_neg)) throw ValidationError("antonym_score: non-finite input");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("antonym_score: temperature must be positive");
  }
  // e^p / (e^p + e^n) = logistic(p - n); exactly 0.5 when p == n.
  return 1.0 / (1.0 + std::exp(-(s_pos - s_neg) / temperature));
}

void PromptPair::validate() const {
  if (positive.empty() || negative.empty()) throw ValidationError("prompt pair texts must be non-empty");
  if (positive == negative) throw ValidationError("prompt pair texts must differ");
}

void PromptSet::validate() const {
  if (set_id.empty()) throw ValidationError("prompt set id is empty");
  for (Attribute a : kAttributes) {
    if (pairs[a].attribute != a) throw ValidationError("prompt pair stored under the wrong attribute");
    pairs[a].validate();
  }
}

json PromptSet::to_json() const {
  json j;
  j["set_id"] = set_id;
  json p = json::object();
  for (Attribute a : kAttributes) {
    p[std::string(to_string(a))] = {{"positive", pairs[a].positive}, {"negative", pairs[a].negative}};
  }
  j["pairs"] = p;
  return j;
}

PromptSet PromptSet::from_json(const json& j) {
  if (!j.is_object() || !j.contains("set_id") || !j.contains("pairs")) {
    throw ValidationError("prompt set requires \"set_id\" and \"pairs\"");
  }
  PromptSet s;
  try {
    s.set_id = j.at("set_id").get<std::string>();
    const auto& p = j.at("pairs");
    for (Attribute a : kAttributes) {
      const auto key = std::string(to_string(a));
      if (!p.contains(key)) throw ValidationError("prompt set is missing attribute \"" + key + "\"");
      s.pairs[a] = {a, p.at(key).at("positive").get<std::string>(), p.at(key).at("negative").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed prompt set: ") + e.what());
  }
  s.validate();
  return s;
}

PromptSet load_prompt_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt set " + path.string());
  try {
    return PromptSet::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError("prompt set parse error: " + std::string(e.what()));
  }
}

double score_embedding(std::span<const double> image, std::span<const double> positive,
                       std::span<const double> negative, double temperature) {
  return antonym_score(cosine_similarity(image, positive), cosine_similarity(image, negative), temperature);
}

double score_image(const ImageRaster& img, const PromptPair& pair, const EmbeddingProvider& provider,
                   double temperature) {
  const Embedding e = provider.embed_image(img);
  const Embedding p = provider.embed_text(pair.positive);
  const Embedding n = provider.embed_text(pair.negative);
  return score_embedding(e, p, n, temperature);
}

void normalize_embedding(Embedding& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw ProviderError("embedding is zero or non-finite");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
}

}  // namespace attiqa
