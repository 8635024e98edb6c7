#include "attiqa/attribute.hpp"

#include <string>

#include "attiqa/error.hpp"

namespace attiqa {

namespace {
constexpr std::array<std::string_view, kNumAttributes> kNames = {
    "sharpness", "contrast", "brightness", "colorfulness", "noisiness"};
}

std::string_view to_string(Attribute a) { return kNames[index_of(a)]; }

std::optional<Attribute> try_parse_attribute(std::string_view name) {
  for (Attribute a : kAttributes) {
    if (kNames[index_of(a)] == name) return a;
  }
  return std::nullopt;
}

Attribute parse_attribute(std::string_view name) {
  if (auto a = try_parse_attribute(name)) return *a;
  throw ValidationError("unknown attribute \"" + std::string(name) + "\"");
}

}  // namespace attiqa
