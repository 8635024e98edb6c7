#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/image.hpp"

namespace attiqa {

enum class DistortionKind : std::uint8_t {
  gaussian_blur,
  zoom_blur,
  lens_blur,
  contrast_adjust,
  brightness_adjust,
  saturation_adjust,
  gaussian_noise,
  iso_noise,
};

inline constexpr std::size_t kNumDistortionKinds = 8;

std::string_view to_string(DistortionKind k);
DistortionKind parse_distortion_kind(std::string_view name);

/// Level parameter. Single-parameter kinds use `primary`; ISO noise uses
/// (primary = read sigma, secondary = shot sigma).
struct DistortionParam {
  double primary = 0.0;
  double secondary = 0.0;

  bool operator==(const DistortionParam&) const = default;
};

struct DistortionSchedule {
  DistortionKind kind{};
  std::vector<DistortionParam> params;
  int expected_direction = 1;  // sign of attribute score change as level grows

  std::size_t levels() const { return params.size(); }
  /// Throws ValidationError unless there are >= 3 levels, parameters are
  /// strictly monotone (componentwise for ISO noise) and direction is +-1.
  void validate() const;
};

std::span<const DistortionKind> distortions_for_attribute(Attribute a);
Attribute attribute_of(DistortionKind k);
bool is_stochastic(DistortionKind k);
/// Parameter value under which the distortion is the identity.
DistortionParam neutral_param(DistortionKind k);

DistortionSchedule default_schedule(DistortionKind k);

/// Applies `kind` at an explicit parameter. Output has the input's shape,
/// values clipped to [0,1]; the seed only matters for noise kinds.
ImageRaster apply_distortion(const ImageRaster& img, DistortionKind kind,
                             const DistortionParam& param, std::uint64_t seed);

/// Applies level `level_index` of `schedule`. Throws ValidationError if the
/// level is out of range.
ImageRaster apply_distortion(const ImageRaster& img, const DistortionSchedule& schedule,
                             std::size_t level_index, std::uint64_t seed);

/// Same, using default_schedule(kind).
ImageRaster apply_distortion(const ImageRaster& img, DistortionKind kind,
                             std::size_t level_index, std::uint64_t seed);

}  // namespace attiqa
