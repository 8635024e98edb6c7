#include "attiqa/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "attiqa/distortion.hpp"
#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/vlm.hpp"

namespace attiqa::synthetic {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

ImageRaster base_content(std::uint64_t seed, std::size_t side) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ImageRaster img("content", side, side);
  const double s = static_cast<double>(side);

  // Background: linear gradient between two colors.
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const double angle = unit(rng) * 2.0 * std::numbers::pi;
  const double gx = std::cos(angle);
  const double gy = std::sin(angle);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double t = 0.5 + 0.5 * ((x / s - 0.5) * gx + (y / s - 0.5) * gy);
      img.at(y, x, 0) = c0.r + (c1.r - c0.r) * t;
      img.at(y, x, 1) = c0.g + (c1.g - c0.g) * t;
      img.at(y, x, 2) = c0.b + (c1.b - c0.b) * t;
    }
  }

  // Soft blobs.
  const int blobs = 3 + static_cast<int>(rng() % 4);
  for (int k = 0; k < blobs; ++k) {
    const Rgb c = random_color(rng);
    const double cx = unit(rng) * s;
    const double cy = unit(rng) * s;
    const double rad = (0.08 + 0.2 * unit(rng)) * s;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double w = 0.8 * std::exp(-d2 / (2.0 * rad * rad));
        img.at(y, x, 0) += (c.r - img.at(y, x, 0)) * w;
        img.at(y, x, 1) += (c.g - img.at(y, x, 1)) * w;
        img.at(y, x, 2) += (c.b - img.at(y, x, 2)) * w;
      }
    }
  }

  // Hard-edged rectangles and discs.
  const int shapes = 2 + static_cast<int>(rng() % 4);
  for (int k = 0; k < shapes; ++k) {
    const Rgb c = random_color(rng);
    const bool disc = unit(rng) < 0.5;
    const double cx = unit(rng) * s;
    const double cy = unit(rng) * s;
    const double hw = (0.05 + 0.15 * unit(rng)) * s;
    const double hh = (0.05 + 0.15 * unit(rng)) * s;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const bool inside = disc ? dx * dx + dy * dy <= hw * hw : std::abs(dx) <= hw && std::abs(dy) <= hh;
        if (!inside) continue;
        img.at(y, x, 0) = c.r;
        img.at(y, x, 1) = c.g;
        img.at(y, x, 2) = c.b;
      }
    }
  }

  // Mild oriented texture.
  const double freq = (4.0 + 8.0 * unit(rng)) * 2.0 * std::numbers::pi / s;
  const double amp = 0.02 + 0.03 * unit(rng);
  const double ta = unit(rng) * std::numbers::pi;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double t = amp * std::sin(freq * (x * std::cos(ta) + y * std::sin(ta)));
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) += t;
    }
  }
  img.clip();
  return img;
}

Factors sample_factors(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Factors f;
  // Each degradation is absent part of the time so clean images occur.
  f.blur_sigma = unit(rng) < 0.3 ? 0.0 : 2.5 * unit(rng);
  f.contrast = 0.45 + 0.9 * unit(rng);
  f.brightness = 0.55 + 0.8 * unit(rng);
  f.saturation = 0.2 + 1.2 * unit(rng);
  f.noise_sigma = unit(rng) < 0.3 ? 0.0 : 0.1 * unit(rng);
  return f;
}

ImageRaster render(std::uint64_t seed, std::size_t side, const Factors& factors) {
  ImageRaster img = base_content(mix_seed(seed, 1), side);
  if (factors.blur_sigma > 0.0) {
    img = apply_distortion(img, DistortionKind::gaussian_blur, {factors.blur_sigma, 0.0}, 0);
  }
  img = apply_distortion(img, DistortionKind::contrast_adjust, {factors.contrast, 0.0}, 0);
  img = apply_distortion(img, DistortionKind::brightness_adjust, {factors.brightness, 0.0}, 0);
  img = apply_distortion(img, DistortionKind::saturation_adjust, {factors.saturation, 0.0}, 0);
  if (factors.noise_sigma > 0.0) {
    img = apply_distortion(img, DistortionKind::gaussian_noise, {factors.noise_sigma, 0.0}, mix_seed(seed, 2));
  }
  return img;
}

double mos_from_stats(const PerAttribute<double>& stats) {
  constexpr PerAttribute<double> kWeight{{0.30, 0.20, 0.15, 0.10, 0.25}};
  const auto u = AnalyticMockProvider::latent(stats);
  double q = 0.0;
  for (Attribute a : kAttributes) q += kWeight[a] * u[a];
  return 3.0 + 2.0 * q;
}

std::vector<ImageRaster> procedural_corpus(std::size_t count, std::size_t side, std::uint64_t seed) {
  std::vector<ImageRaster> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ImageRaster img = base_content(mix_seed(seed, i), side);
    char id[32];
    std::snprintf(id, sizeof id, "probe-%03zu", i);
    img.set_id(id);
    out.push_back(std::move(img));
  }
  return out;
}

DatasetManifest write_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  if (options.count == 0) throw ValidationError("synthetic dataset needs count > 0");
  if (options.name.empty()) throw ValidationError("synthetic dataset needs a name");
  std::filesystem::create_directories(dir / "images");
  DatasetManifest m;
  m.name = options.name;
  m.base_dir = dir;
  for (std::size_t i = 0; i < options.count; ++i) {
    const std::uint64_t seed = mix_seed(options.seed, i);
    char id[96];
    std::snprintf(id, sizeof id, "%s-%05zu", options.name.c_str(), i);
    const std::string rel = std::string("images/") + id + ".png";
    save_png(render(seed, options.side, sample_factors(mix_seed(seed, 7))), dir / rel);
    // Statistics of what was actually written, after quantization.
    const PerAttribute<double> stats = analytic_stats(load_png(dir / rel));
    ManifestRecord r;
    r.image_id = id;
    r.path = rel;
    if (options.with_mos) r.mos = mos_from_stats(stats);
    if (options.with_attributes) r.attribute_scores = stats;
    m.records.push_back(std::move(r));
  }
  save_manifest(m, dir / (options.name + ".jsonl"));
  return m;
}

}  // namespace attiqa::synthetic
