#include "attiqa/distortion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "attiqa/error.hpp"

namespace attiqa {

namespace {

constexpr std::array<std::string_view, kNumDistortionKinds> kKindNames = {
    "gaussian_blur",     "zoom_blur",         "lens_blur",      "contrast_adjust",
    "brightness_adjust", "saturation_adjust", "gaussian_noise", "iso_noise"};

constexpr std::array kSharpness = {DistortionKind::gaussian_blur, DistortionKind::zoom_blur,
                                   DistortionKind::lens_blur};
constexpr std::array kContrast = {DistortionKind::contrast_adjust};
constexpr std::array kBrightness = {DistortionKind::brightness_adjust};
constexpr std::array kColorfulness = {DistortionKind::saturation_adjust};
constexpr std::array kNoisiness = {DistortionKind::gaussian_noise, DistortionKind::iso_noise};

constexpr int kZoomCopies = 8;

/// Mirror index into [0, n) without repeating the edge sample.
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

ImageRaster gaussian_blur(const ImageRaster& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  ImageRaster tmp = img;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(reflect(x + k, w)), c);
        }
        tmp.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc;
      }
    }
  }
  ImageRaster out = img;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 tmp.at(static_cast<std::size_t>(reflect(y + k, h)), static_cast<std::size_t>(x), c);
        }
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc;
      }
    }
  }
  out.clip();
  return out;
}

double bilinear(const ImageRaster& img, double fy, double fx, std::size_t c) {
  fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
  fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
  const auto y0 = static_cast<std::size_t>(fy);
  const auto x0 = static_cast<std::size_t>(fx);
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const double wy = fy - static_cast<double>(y0);
  const double wx = fx - static_cast<double>(x0);
  const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
  const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
  return top * (1 - wy) + bot * wy;
}

ImageRaster zoom_blur(const ImageRaster& img, double max_zoom) {
  if (max_zoom <= 1.0) return img;
  const double cy = 0.5 * static_cast<double>(img.height() - 1);
  const double cx = 0.5 * static_cast<double>(img.width() - 1);
  ImageRaster out(img.id(), img.height(), img.width());
  for (int k = 0; k < kZoomCopies; ++k) {
    const double z = 1.0 + (max_zoom - 1.0) * k / (kZoomCopies - 1);
    for (std::size_t y = 0; y < img.height(); ++y) {
      const double sy = cy + (static_cast<double>(y) - cy) / z;
      for (std::size_t x = 0; x < img.width(); ++x) {
        const double sx = cx + (static_cast<double>(x) - cx) / z;
        for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) += bilinear(img, sy, sx, c);
      }
    }
  }
  for (double& v : out.pixels()) v /= kZoomCopies;
  out.clip();
  return out;
}

ImageRaster lens_blur(const ImageRaster& img, double radius) {
  if (radius <= 0.0) return img;
  const auto r = static_cast<std::ptrdiff_t>(std::floor(radius));
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> taps;
  for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
    for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
      if (static_cast<double>(dy * dy + dx * dx) <= radius * radius) taps.emplace_back(dy, dx);
    }
  }
  const double weight = 1.0 / static_cast<double>(taps.size());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  ImageRaster out = img;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& [dy, dx] : taps) {
        const auto sy = static_cast<std::size_t>(reflect(y + dy, h));
        const auto sx = static_cast<std::size_t>(reflect(x + dx, w));
        for (std::size_t c = 0; c < 3; ++c) acc[c] += img.at(sy, sx, c);
      }
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc[c] * weight;
      }
    }
  }
  out.clip();
  return out;
}

ImageRaster contrast_adjust(const ImageRaster& img, double factor) {
  ImageRaster out = img;
  const auto px = img.pixels();
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= static_cast<double>(px.size());
  // in + (in - mean)(f - 1) equals (in - mean) f + mean and is exact at f = 1.
  for (std::size_t i = 0; i < px.size(); ++i) out.pixels()[i] = px[i] + (px[i] - mean) * (factor - 1.0);
  out.clip();
  return out;
}

// Hexcone HSV with H and S held fixed: scaling V scales all channels.
ImageRaster brightness_adjust(const ImageRaster& img, double factor) {
  ImageRaster out = img;
  auto px = out.pixels();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double v = std::max({px[3 * i], px[3 * i + 1], px[3 * i + 2]});
    if (v <= 0.0) continue;
    const double k = std::min(factor, 1.0 / v);
    for (std::size_t c = 0; c < 3; ++c) px[3 * i + c] *= k;
  }
  out.clip();
  return out;
}

// Hexcone HSV with H and V held fixed: V - channel is proportional to S.
ImageRaster saturation_adjust(const ImageRaster& img, double factor) {
  ImageRaster out = img;
  auto px = out.pixels();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    double* p = &px[3 * i];
    const double v = std::max({p[0], p[1], p[2]});
    const double lo = std::min({p[0], p[1], p[2]});
    if (v <= 0.0 || v == lo) continue;
    const double s = (v - lo) / v;
    const double k = std::min(factor * s, 1.0) / s;
    for (std::size_t c = 0; c < 3; ++c) p[c] = p[c] + (v - p[c]) * (1.0 - k);
  }
  out.clip();
  return out;
}

ImageRaster gaussian_noise(const ImageRaster& img, double sigma, std::uint64_t seed) {
  ImageRaster out = img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.pixels()) v += sigma * normal(rng);
  out.clip();
  return out;
}

ImageRaster iso_noise(const ImageRaster& img, double read_sigma, double shot_sigma, std::uint64_t seed) {
  ImageRaster out = img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.pixels()) {
    const double shot = shot_sigma * std::sqrt(std::max(v, 0.0)) * normal(rng);
    const double read = read_sigma * normal(rng);
    v += shot + read;
  }
  out.clip();
  return out;
}

}  // namespace

std::string_view to_string(DistortionKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

DistortionKind parse_distortion_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<DistortionKind>(i);
  }
  throw ValidationError("unknown distortion kind \"" + std::string(name) + "\"");
}

void DistortionSchedule::validate() const {
  if (params.size() < 3) throw ValidationError("distortion schedule needs at least 3 levels");
  if (expected_direction != 1 && expected_direction != -1) {
    throw ValidationError("expected_direction must be +1 or -1");
  }
  const auto monotone = [&](auto field) {
    bool up = true;
    bool down = true;
    for (std::size_t i = 1; i < params.size(); ++i) {
      up = up && field(params[i]) > field(params[i - 1]);
      down = down && field(params[i]) < field(params[i - 1]);
    }
    return up || down;
  };
  const bool ok = monotone([](const DistortionParam& p) { return p.primary; }) &&
                  (kind != DistortionKind::iso_noise || monotone([](const DistortionParam& p) { return p.secondary; }));
  if (!ok) throw ValidationError("distortion schedule parameters must be strictly monotone");
}

std::span<const DistortionKind> distortions_for_attribute(Attribute a) {
  switch (a) {
    case Attribute::sharpness: return kSharpness;
    case Attribute::contrast: return kContrast;
    case Attribute::brightness: return kBrightness;
    case Attribute::colorfulness: return kColorfulness;
    case Attribute::noisiness: return kNoisiness;
  }
  return {};
}

Attribute attribute_of(DistortionKind k) {
  switch (k) {
    case DistortionKind::gaussian_blur:
    case DistortionKind::zoom_blur:
    case DistortionKind::lens_blur: return Attribute::sharpness;
    case DistortionKind::contrast_adjust: return Attribute::contrast;
    case DistortionKind::brightness_adjust: return Attribute::brightness;
    case DistortionKind::saturation_adjust: return Attribute::colorfulness;
    case DistortionKind::gaussian_noise:
    case DistortionKind::iso_noise: return Attribute::noisiness;
  }
  return Attribute::sharpness;
}

bool is_stochastic(DistortionKind k) {
  return k == DistortionKind::gaussian_noise || k == DistortionKind::iso_noise;
}

DistortionParam neutral_param(DistortionKind k) {
  switch (k) {
    case DistortionKind::zoom_blur:
    case DistortionKind::contrast_adjust:
    case DistortionKind::brightness_adjust:
    case DistortionKind::saturation_adjust: return {1.0, 0.0};
    default: return {0.0, 0.0};
  }
}

DistortionSchedule default_schedule(DistortionKind k) {
  DistortionSchedule s;
  s.kind = k;
  const auto single = [](std::initializer_list<double> values) {
    std::vector<DistortionParam> out;
    for (double v : values) out.push_back({v, 0.0});
    return out;
  };
  switch (k) {
    case DistortionKind::gaussian_blur:
      s.params = single({0.5, 1.0, 2.0, 3.0, 4.0});
      s.expected_direction = -1;
      break;
    case DistortionKind::zoom_blur:
      s.params = single({1.01, 1.02, 1.04, 1.07, 1.10});
      s.expected_direction = -1;
      break;
    case DistortionKind::lens_blur:
      s.params = single({1, 2, 3, 5, 7});
      s.expected_direction = -1;
      break;
    case DistortionKind::contrast_adjust:
      s.params = single({0.4, 0.6, 0.8, 1.2, 1.5});
      s.expected_direction = 1;
      break;
    case DistortionKind::brightness_adjust:
      s.params = single({0.4, 0.6, 0.8, 1.2, 1.5});
      s.expected_direction = 1;
      break;
    case DistortionKind::saturation_adjust:
      s.params = single({0.2, 0.5, 0.8, 1.2, 1.5});
      s.expected_direction = 1;
      break;
    case DistortionKind::gaussian_noise:
      s.params = single({0.02, 0.05, 0.10, 0.15, 0.20});
      s.expected_direction = -1;
      break;
    case DistortionKind::iso_noise:
      s.params = {{0.01, 0.02}, {0.02, 0.04}, {0.03, 0.08}, {0.05, 0.12}, {0.08, 0.16}};
      s.expected_direction = -1;
      break;
  }
  return s;
}

ImageRaster apply_distortion(const ImageRaster& img, DistortionKind kind, const DistortionParam& param,
                             std::uint64_t seed) {
  switch (kind) {
    case DistortionKind::gaussian_blur: return gaussian_blur(img, param.primary);
    case DistortionKind::zoom_blur: return zoom_blur(img, param.primary);
    case DistortionKind::lens_blur: return lens_blur(img, param.primary);
    case DistortionKind::contrast_adjust: return contrast_adjust(img, param.primary);
    case DistortionKind::brightness_adjust: return brightness_adjust(img, param.primary);
    case DistortionKind::saturation_adjust: return saturation_adjust(img, param.primary);
    case DistortionKind::gaussian_noise: return gaussian_noise(img, param.primary, seed);
    case DistortionKind::iso_noise: return iso_noise(img, param.primary, param.secondary, seed);
  }
  return img;
}

ImageRaster apply_distortion(const ImageRaster& img, const DistortionSchedule& schedule,
                             std::size_t level_index, std::uint64_t seed) {
  if (level_index >= schedule.levels()) {
    throw ValidationError("distortion level " + std::to_string(level_index) + " out of range [0, " +
                          std::to_string(schedule.levels()) + ")");
  }
  return apply_distortion(img, schedule.kind, schedule.params[level_index], seed);
}

ImageRaster apply_distortion(const ImageRaster& img, DistortionKind kind, std::size_t level_index,
                             std::uint64_t seed) {
  return apply_distortion(img, default_schedule(kind), level_index, seed);
}

}  // namespace attiqa
