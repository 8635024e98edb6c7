#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace attiqa {

/// The five quality attributes. Declaration order is the canonical order
/// used for feature concatenation and every serialized layout.
enum class Attribute : std::uint8_t {
  sharpness = 0,
  contrast = 1,
  brightness = 2,
  colorfulness = 3,
  noisiness = 4,
};

inline constexpr std::size_t kNumAttributes = 5;

inline constexpr std::array<Attribute, kNumAttributes> kAttributes = {
    Attribute::sharpness, Attribute::contrast, Attribute::brightness,
    Attribute::colorfulness, Attribute::noisiness};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }

std::string_view to_string(Attribute a);
std::optional<Attribute> try_parse_attribute(std::string_view name);
/// Throws ValidationError for unknown names.
Attribute parse_attribute(std::string_view name);

/// Fixed-size map keyed by Attribute, stored in canonical order.
template <class T>
struct PerAttribute {
  std::array<T, kNumAttributes> values{};

  T& operator[](Attribute a) { return values[index_of(a)]; }
  const T& operator[](Attribute a) const { return values[index_of(a)]; }

  auto begin() { return values.begin(); }
  auto end() { return values.end(); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }

  bool operator==(const PerAttribute&) const = default;
};

}  // namespace attiqa
