#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "attiqa/error.hpp"
#include "attiqa/training.hpp"

namespace attiqa::training {

namespace {

void require_finite(const PerAttribute<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError(std::string("non-finite ") + what);
  }
}

}  // namespace

int indicator(double s1, double s2) {
  if (!std::isfinite(s1) || !std::isfinite(s2)) throw ValidationError("indicator needs finite scores");
  return s1 > s2 ? 0 : 1;
}

PairLoss pair_ranking_loss_grad(const PerAttribute<double>& pred1, const PerAttribute<double>& pred2,
                                const PerAttribute<double>& label1, const PerAttribute<double>& label2, double margin,
                                RankingOrientation orientation) {
  if (!std::isfinite(margin) || margin <= 0.0) throw ValidationError("margin must be positive");
  require_finite(pred1, "prediction");
  require_finite(pred2, "prediction");
  require_finite(label1, "pseudo-label");
  require_finite(label2, "pseudo-label");
  PairLoss out;
  for (Attribute a : kAttributes) {
    out.d_pred1[a] = 0.0;
    out.d_pred2[a] = 0.0;
    if (orientation == RankingOrientation::literal) {
      if (indicator(label1[a], label2[a]) == 0) continue;
      const double h = margin - (pred1[a] - pred2[a]);
      if (h > 0.0) {
        out.value += h;
        out.d_pred1[a] = -1.0;
        out.d_pred2[a] = 1.0;
      }
      continue;
    }
    if (label1[a] == label2[a]) continue;
    const bool first_higher = label1[a] > label2[a];
    const double gap = first_higher ? pred1[a] - pred2[a] : pred2[a] - pred1[a];
    const double h = margin - gap;
    if (h > 0.0) {
      out.value += h;
      out.d_pred1[a] = first_higher ? -1.0 : 1.0;
      out.d_pred2[a] = -out.d_pred1[a];
    }
  }
  return out;
}

double pair_ranking_loss(const PerAttribute<double>& pred1, const PerAttribute<double>& pred2,
                         const PerAttribute<double>& label1, const PerAttribute<double>& label2, double margin,
                         RankingOrientation orientation) {
  return pair_ranking_loss_grad(pred1, pred2, label1, label2, margin, orientation).value;
}

PointLoss l2_pretrain_loss_grad(const PerAttribute<double>& pred, const PerAttribute<double>& label) {
  require_finite(pred, "prediction");
  require_finite(label, "pseudo-label");
  PointLoss out;
  for (Attribute a : kAttributes) {
    const double d = pred[a] - label[a];
    out.value += d * d;
    out.d_pred[a] = 2.0 * d;
  }
  return out;
}

double l2_pretrain_loss(const PerAttribute<double>& pred, const PerAttribute<double>& label) {
  return l2_pretrain_loss_grad(pred, label).value;
}

std::vector<IndexPair> sample_pairs(std::size_t batch_size, std::uint64_t seed, PairSampler sampler) {
  if (batch_size < 2) throw ValidationError("pair sampling needs a batch of at least 2");
  std::vector<IndexPair> pairs;
  if (sampler == PairSampler::exhaustive) {
    pairs.reserve(batch_size * (batch_size - 1) / 2);
    for (std::size_t i = 0; i < batch_size; ++i) {
      for (std::size_t j = i + 1; j < batch_size; ++j) pairs.push_back({i, j});
    }
    return pairs;
  }
  // Sattolo's algorithm yields a uniformly random single cycle, which has
  // no fixed points.
  std::vector<std::size_t> p(batch_size);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = batch_size - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  pairs.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) pairs.push_back({i, p[i]});
  return pairs;
}

AdamW::AdamW(std::size_t parameter_count, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr, double weight_decay,
                 std::span<const ParamRange> ranges) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ValidationError("optimizer size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const ParamRange& r : ranges) {
    for (std::size_t i = r.offset; i < r.end(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= lr * (mhat / (std::sqrt(vhat) + epsilon_) + weight_decay * params[i]);
    }
  }
}

double milestone_lr(double base, std::span<const int> milestones, double decay, int epoch) {
  double lr = base;
  for (int m : milestones) {
    if (epoch >= m) lr *= decay;
  }
  return lr;
}

double cosine_lr(double base, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return base;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * t));
}

ImageRaster random_crop(const ImageRaster& img, std::size_t side, std::mt19937_64& rng) {
  if (img.height() < side || img.width() < side) {
    throw ValidationError("image " + img.id() + " is smaller than the crop size " + std::to_string(side));
  }
  std::uniform_int_distribution<std::size_t> ys(0, img.height() - side);
  std::uniform_int_distribution<std::size_t> xs(0, img.width() - side);
  const std::size_t y = ys(rng);
  const std::size_t x = xs(rng);
  return crop(img, y, x, side, side);
}

void write_loss_history(const std::vector<LossRow>& rows, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    out << "step,epoch,loss,lr\n";
    for (const LossRow& r : rows) out << r.step << ',' << r.epoch << ',' << r.loss << ',' << r.lr << '\n';
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace attiqa::training
