#include <cctype>
#include <fstream>
#include <set>

#include "attiqa/error.hpp"
#include "attiqa/promptsel.hpp"

namespace attiqa::promptsel {

using nlohmann::json;

std::string render_prompt(std::string_view adjective) {
  const auto first = adjective.find_first_not_of(" \t");
  const auto last = adjective.find_last_not_of(" \t");
  if (first == std::string_view::npos) throw ValidationError("empty adjective");
  std::string out(adjective.substr(first, last - first + 1));
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out + " image";
}

void PromptCandidateSet::validate() const {
  const auto check = [&](const std::vector<std::string>& list, const char* side) {
    if (list.empty()) {
      throw ValidationError(std::string("empty ") + side + " candidate list for " + std::string(to_string(attribute)));
    }
    std::set<std::string> seen;
    for (const auto& adj : list) {
      if (adj.find_first_not_of(" \t") == std::string::npos) {
        throw ValidationError("blank adjective in " + std::string(to_string(attribute)) + " " + side);
      }
      if (!seen.insert(adj).second) {
        throw ValidationError("duplicate adjective \"" + adj + "\" in " + std::string(to_string(attribute)) + " " +
                              side);
      }
    }
  };
  check(positives, "positive");
  check(negatives, "negative");
}

CandidateFile parse_candidates(const json& j) {
  if (!j.is_object()) throw ValidationError("candidate file must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "set_id" && key != "attributes") throw ValidationError("unknown key in candidate file: " + key);
  }
  CandidateFile out;
  try {
    out.set_id = j.at("set_id").get<std::string>();
    const json& attrs = j.at("attributes");
    if (!attrs.is_object()) throw ValidationError("\"attributes\" must be an object");
    for (const auto& [key, _] : attrs.items()) {
      if (!try_parse_attribute(key)) throw ValidationError("unknown attribute in candidate file: " + key);
    }
    for (Attribute a : kAttributes) {
      const std::string name(to_string(a));
      if (!attrs.contains(name)) throw ValidationError("candidate file is missing attribute " + name);
      const json& entry = attrs.at(name);
      PromptCandidateSet set;
      set.attribute = a;
      set.set_id = out.set_id;
      set.positives = entry.at("positive").get<std::vector<std::string>>();
      set.negatives = entry.at("negative").get<std::vector<std::string>>();
      set.validate();
      out.sets[a] = std::move(set);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed candidate file: ") + e.what());
  }
  if (out.set_id.empty()) throw ValidationError("candidate file has empty set_id");
  return out;
}

CandidateFile load_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open candidate file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("candidate file " + path.string() + ": " + e.what());
  }
  return parse_candidates(j);
}

std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::distortion: return "distortion";
    case SelectionMode::perception: return "perception";
    case SelectionMode::joint: return "joint";
  }
  return "?";
}

SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "distortion") return SelectionMode::distortion;
  if (s == "perception") return SelectionMode::perception;
  if (s == "joint") return SelectionMode::joint;
  throw ValidationError("unknown selection mode: " + std::string(s));
}

}  // namespace attiqa::promptsel
