#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/vlm.hpp"

namespace attiqa {

PerAttribute<double> analytic_stats(const ImageRaster& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const std::vector<double> y = luma(img);
  const auto n = static_cast<double>(y.size());

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  // Deviations are taken from the first pixel so a flat image gives exactly 0.
  double shifted_mean = 0.0;
  for (double v : y) shifted_mean += v - y[0];
  shifted_mean /= n;
  double var = 0.0;
  for (double v : y) var += (v - y[0] - shifted_mean) * (v - y[0] - shifted_mean);
  var /= n;

  double grad = 0.0;
  for (std::size_t r = 0; r + 1 < h; ++r) {
    for (std::size_t c = 0; c + 1 < w; ++c) {
      const double dx = y[r * w + c + 1] - y[r * w + c];
      const double dy = y[(r + 1) * w + c] - y[r * w + c];
      grad += std::sqrt(dx * dx + dy * dy);
    }
  }
  grad /= static_cast<double>((h - 1) * (w - 1));

  double lap = 0.0;
  for (std::size_t r = 1; r + 1 < h; ++r) {
    for (std::size_t c = 1; c + 1 < w; ++c) {
      const double m = y[r * w + c];
      const double l = (m - y[(r - 1) * w + c]) + (m - y[(r + 1) * w + c]) + (m - y[r * w + c - 1]) +
                       (m - y[r * w + c + 1]);
      lap += std::abs(l);
    }
  }
  lap /= static_cast<double>((h - 2) * (w - 2));

  const auto px = img.pixels();
  double m_rg = 0.0;
  double m_yb = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    m_rg += px[3 * i] - px[3 * i + 1];
    m_yb += 0.5 * (px[3 * i] + px[3 * i + 1]) - px[3 * i + 2];
  }
  m_rg /= n;
  m_yb /= n;
  double v_rg = 0.0;
  double v_yb = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double rg = px[3 * i] - px[3 * i + 1] - m_rg;
    const double yb = 0.5 * (px[3 * i] + px[3 * i + 1]) - px[3 * i + 2] - m_yb;
    v_rg += rg * rg;
    v_yb += yb * yb;
  }

  PerAttribute<double> s;
  s[Attribute::sharpness] = grad;
  s[Attribute::contrast] = std::sqrt(var);
  s[Attribute::brightness] = mean;
  s[Attribute::colorfulness] = std::sqrt(v_rg / n + v_yb / n);
  s[Attribute::noisiness] = -lap;
  return s;
}

namespace {

// Reference moments used to standardize the statistics before squashing.
// Calibrated on the synthetic dataset generator (median and spread).
constexpr PerAttribute<double> kStatCenter{{0.040, 0.075, 0.490, 0.170, -0.075}};
constexpr PerAttribute<double> kStatScale{{0.045, 0.032, 0.140, 0.090, 0.120}};

constexpr double kContentLevel = 6.0;
constexpr double kAxisWeight = 0.95;
constexpr double kResidualWeight = 0.05;
constexpr std::uint64_t kAxisSeed = 0x5eed'a77e'0000'0001ULL;

Embedding random_unit(std::uint64_t seed, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Embedding v(dim);
  for (double& x : v) x = normal(rng);
  normalize_embedding(v);
  return v;
}

std::string adjective_of(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto first = s.find_first_not_of(" \t");
  const auto last = s.find_last_not_of(" \t");
  s = first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
  for (std::string_view suffix : {" image", " photo"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.erase(s.size() - suffix.size());
      break;
    }
  }
  return s;
}

}  // namespace

AnalyticMockProvider::AnalyticMockProvider() {
  // Gram-Schmidt over seeded Gaussian vectors: five attribute axes + content.
  std::mt19937_64 rng(kAxisSeed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (axes_.size() < kNumAttributes + 1) {
    Embedding v(kDim);
    for (double& x : v) x = normal(rng);
    for (const auto& q : axes_) {
      double d = 0.0;
      for (std::size_t i = 0; i < kDim; ++i) d += v[i] * q[i];
      for (std::size_t i = 0; i < kDim; ++i) v[i] -= d * q[i];
    }
    normalize_embedding(v);
    axes_.push_back(std::move(v));
  }
}

PerAttribute<double> AnalyticMockProvider::latent(const PerAttribute<double>& stats) {
  PerAttribute<double> u;
  for (Attribute a : kAttributes) u[a] = std::tanh((stats[a] - kStatCenter[a]) / kStatScale[a]);
  return u;
}

Embedding AnalyticMockProvider::embed_image(const ImageRaster& img) const {
  const auto u = latent(analytic_stats(img));
  Embedding e(kDim, 0.0);
  for (Attribute a : kAttributes) {
    for (std::size_t i = 0; i < kDim; ++i) e[i] += u[a] * axes_[index_of(a)][i];
  }
  for (std::size_t i = 0; i < kDim; ++i) e[i] += kContentLevel * axes_[kNumAttributes][i];
  normalize_embedding(e);
  return e;
}

Embedding AnalyticMockProvider::embed_text(std::string_view text) const {
  const std::string adj = adjective_of(text);
  const std::uint64_t seed = fnv1a64(adj);
  const auto planted = planted_adjectives();
  Embedding direction(kDim, 0.0);
  bool known = false;
  for (Attribute a : kAttributes) {
    double sign = 0.0;
    if (adj == planted[a].first) sign = 1.0;
    if (adj == planted[a].second) sign = -1.0;
    if (sign != 0.0) {
      for (std::size_t i = 0; i < kDim; ++i) direction[i] = sign * axes_[index_of(a)][i];
      known = true;
    }
  }
  if (adj == "good" || adj == "bad") {
    const double sign = adj == "good" ? 1.0 : -1.0;
    for (Attribute a : kAttributes) {
      for (std::size_t i = 0; i < kDim; ++i) direction[i] += sign * axes_[index_of(a)][i] / std::sqrt(5.0);
    }
    known = true;
  }
  Embedding residual = random_unit(seed, kDim);
  if (!known) return residual;
  Embedding e(kDim);
  for (std::size_t i = 0; i < kDim; ++i) e[i] = kAxisWeight * direction[i] + kResidualWeight * residual[i];
  normalize_embedding(e);
  return e;
}

PerAttribute<std::pair<std::string, std::string>> AnalyticMockProvider::planted_adjectives() {
  PerAttribute<std::pair<std::string, std::string>> p;
  p[Attribute::sharpness] = {"sharp", "blurry"};
  p[Attribute::contrast] = {"high-contrast", "low-contrast"};
  p[Attribute::brightness] = {"bright", "dark"};
  p[Attribute::colorfulness] = {"colorful", "colorless"};
  p[Attribute::noisiness] = {"noiseless", "noisy"};
  return p;
}

PromptSet AnalyticMockProvider::planted_prompt_set() {
  const auto planted = planted_adjectives();
  PromptSet s;
  s.set_id = "mock-planted";
  for (Attribute a : kAttributes) {
    auto cap = [](std::string w) {
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      return w + " image";
    };
    s.pairs[a] = {a, cap(planted[a].first), cap(planted[a].second)};
  }
  return s;
}

}  // namespace attiqa
