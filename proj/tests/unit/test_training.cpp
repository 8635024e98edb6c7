#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "attiqa/error.hpp"
#include "attiqa/evaluation.hpp"
#include "attiqa/synthetic.hpp"
#include "attiqa/training.hpp"
#include "doctest.h"
#include "support/tempdir.hpp"

using namespace attiqa;
using namespace attiqa::training;

namespace {

PerAttribute<double> all(double v) {
  PerAttribute<double> p;
  p.values.fill(v);
  return p;
}

/// Only sharpness differs; the rest are tied at 0.5.
PerAttribute<double> one(double v) {
  PerAttribute<double> p = all(0.5);
  p[Attribute::sharpness] = v;
  return p;
}

RunConfig tiny_config() {
  RunConfig c = RunConfig::desk();
  c.model.channels = {6, 12};
  c.model.head_hidden = 16;
  c.model.reg_hidden = 8;
  c.pretrain.resize_short = 24;
  c.pretrain.crop = 20;
  c.pretrain.batch = 8;
  c.pretrain.epochs = 3;
  c.pretrain.lr_milestones = {2};
  c.finetune.resize_short = 24;
  c.finetune.crop = 20;
  c.finetune.batch = 8;
  c.finetune.epochs = 3;
  c.eval.resize_short = 24;
  c.eval.crop = 20;
  c.validate();
  return c;
}

struct Fixture {
  TempDir dir;
  DatasetManifest manifest;
  LabelStore labels;

  Fixture() {
    synthetic::DatasetOptions o;
    o.name = "tiny";
    o.count = 24;
    o.side = 24;
    o.seed = 6;
    manifest = synthetic::write_dataset(dir.path(), o);
    for (const auto& r : manifest.records) {
      AttributeScoreRecord rec{r.image_id, *r.attribute_scores, "test", "stats"};
      for (double& v : rec.scores.values) v = 1.0 / (1.0 + std::exp(-v));
      labels.add(rec);
    }
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("indicator") {
  CHECK(indicator(0.7, 0.3) == 0);
  CHECK(indicator(0.3, 0.7) == 1);
  CHECK(indicator(0.5, 0.5) == 1);
}

TEST_CASE("pair ranking loss examples") {
  CHECK(pair_ranking_loss(one(0.5), one(0.2), one(0.8), one(0.4), 0.1) == 0.0);
  CHECK(pair_ranking_loss(one(0.30), one(0.25), one(0.8), one(0.4), 0.1) == doctest::Approx(0.05).epsilon(1e-14));
  // Swapping the pair changes nothing.
  CHECK(pair_ranking_loss(one(0.25), one(0.30), one(0.4), one(0.8), 0.1) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(pair_ranking_loss(all(0.9), all(0.1), all(0.5), all(0.5), 0.1) == 0.0);
  CHECK(pair_ranking_loss(all(0.1), all(0.9), all(0.3), all(0.3), 0.1) == 0.0);
}

TEST_CASE("pair ranking loss gradient and literal orientation") {
  const auto g = pair_ranking_loss_grad(one(0.30), one(0.25), one(0.8), one(0.4), 0.1);
  CHECK(g.d_pred1[Attribute::sharpness] == -1.0);
  CHECK(g.d_pred2[Attribute::sharpness] == 1.0);
  CHECK(g.d_pred1[Attribute::contrast] == 0.0);

  // Literal form: hinge on E1 - E2 gated by indicator(s1, s2).
  const double lit = pair_ranking_loss(one(0.30), one(0.25), one(0.4), one(0.8), 0.1, RankingOrientation::literal);
  const double tied = 4 * 0.1;  // tied labels gate to 1 with equal predictions
  CHECK(lit == doctest::Approx(tied + 0.05));
  CHECK(pair_ranking_loss(one(0.30), one(0.25), one(0.8), one(0.4), 0.1, RankingOrientation::literal) ==
        doctest::Approx(tied));
}

TEST_CASE("ranking loss is zero exactly when ordered attributes are separated") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    PerAttribute<double> p1, p2, s1, s2;
    bool separated = true;
    for (Attribute a : kAttributes) {
      s1[a] = std::round(u(rng) * 4) / 4;
      s2[a] = std::round(u(rng) * 4) / 4;
      p1[a] = u(rng);
      p2[a] = u(rng);
      if (s1[a] > s2[a] && p1[a] - p2[a] < 0.1) separated = false;
      if (s2[a] > s1[a] && p2[a] - p1[a] < 0.1) separated = false;
    }
    CHECK((pair_ranking_loss(p1, p2, s1, s2, 0.1) == 0.0) == separated);
  }
}

TEST_CASE("l2 pretraining loss") {
  PerAttribute<double> lab;
  lab.values = {0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(l2_pretrain_loss(lab, lab) == 0.0);
  PerAttribute<double> off = lab;
  off[Attribute::contrast] += 0.1;
  CHECK(l2_pretrain_loss(off, lab) == doctest::Approx(0.01));
  for (double& v : off.values) v += 0.1;
  off[Attribute::contrast] -= 0.1;
  CHECK(l2_pretrain_loss(off, lab) == doctest::Approx(0.05));
  CHECK(l2_pretrain_loss_grad(off, lab).d_pred[Attribute::noisiness] == doctest::Approx(0.2));
}

TEST_CASE("pair sampling") {
  const auto d = sample_pairs(4, 3, PairSampler::derangement);
  CHECK(d.size() == 4);
  std::set<std::size_t> firsts, seconds;
  for (const auto& p : d) {
    CHECK(p.first != p.second);
    firsts.insert(p.first);
    seconds.insert(p.second);
  }
  CHECK(firsts.size() == 4);
  CHECK(seconds.size() == 4);
  CHECK(sample_pairs(4, 3, PairSampler::derangement) == d);
  const auto e = sample_pairs(4, 3, PairSampler::exhaustive);
  CHECK(e.size() == 6);
  CHECK(sample_pairs(2, 0, PairSampler::derangement).size() == 2);
  CHECK_THROWS_AS(sample_pairs(1, 0, PairSampler::exhaustive), ValidationError);
}

TEST_CASE("learning rate schedules") {
  const std::vector<int> ms{60, 80};
  CHECK(milestone_lr(1e-4, ms, 0.1, 0) == 1e-4);
  CHECK(milestone_lr(1e-4, ms, 0.1, 59) == 1e-4);
  CHECK(milestone_lr(1e-4, ms, 0.1, 60) == doctest::Approx(1e-5));
  CHECK(milestone_lr(1e-4, ms, 0.1, 80) == doctest::Approx(1e-6));
  CHECK(cosine_lr(1.0, 0, 100) == 1.0);
  CHECK(cosine_lr(1.0, 50, 100) == doctest::Approx(0.5));
  CHECK(cosine_lr(1.0, 100, 100) == doctest::Approx(0.0));
}

TEST_CASE("AdamW touches only the given ranges") {
  std::vector<double> p{1.0, 1.0, 1.0, 1.0};
  const std::vector<double> g{1.0, -1.0, 1.0, 1.0};
  AdamW opt(4);
  const ParamRange r{0, 2};
  opt.step(p, g, 0.1, 0.0, std::span(&r, 1));
  CHECK(p[0] == doctest::Approx(0.9));
  CHECK(p[1] == doctest::Approx(1.1));
  CHECK(p[2] == 1.0);
  CHECK(opt.steps() == 1);
  AdamW decay(1);
  std::vector<double> q{2.0};
  const ParamRange all{0, 1};
  decay.step(q, std::vector<double>{0.0}, 0.1, 0.5, std::span(&all, 1));
  CHECK(q[0] == doctest::Approx(2.0 * (1 - 0.1 * 0.5)));
}

TEST_CASE("random crop") {
  const ImageRaster img = synthetic::base_content(1, 30);
  std::mt19937_64 a(5), b(5);
  CHECK(random_crop(img, 20, a).same_pixels(random_crop(img, 20, b)));
  std::mt19937_64 c(1);
  CHECK(random_crop(img, 30, c).same_pixels(img));
  CHECK_THROWS_AS(random_crop(img, 31, c), ValidationError);
}

TEST_CASE("loss history csv") {
  TempDir dir;
  write_loss_history({{1, 0, 0.5, 1e-3}, {2, 1, 0.25, 1e-4}}, dir / "h.csv");
  const std::string s = slurp(dir / "h.csv");
  CHECK(s.rfind("step,epoch,loss,lr\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}

TEST_CASE("pretraining is deterministic and writes artifacts") {
  Fixture fx;
  const RunConfig c = tiny_config();
  TrainOptions one_job;
  one_job.provider_id = "test";
  one_job.prompt_set_id = "stats";
  TrainOptions three = one_job;
  three.jobs = 3;
  const auto a = pretrain(fx.manifest, fx.labels, c, fx.dir / "run", one_job);
  const auto b = pretrain(fx.manifest, fx.labels, c, "", three);
  CHECK(a.model.checksum() == b.model.checksum());
  CHECK(a.epoch_loss.size() == 3);
  CHECK(a.history.size() == 3 * 3);
  CHECK(a.history.back().lr == doctest::Approx(c.pretrain.lr * c.pretrain.lr_decay));
  CHECK(std::filesystem::exists(fx.dir / "run" / "loss_history.csv"));
  const Checkpoint ck = load_checkpoint(fx.dir / "run" / "final");
  CHECK(ck.model.checksum() == a.model.checksum());
  CHECK(ck.manifest.stage == "pretrain");
  CHECK(ck.manifest.prompt_set_id == "stats");
  CHECK(ck.manifest.config_hash == c.hash());

  RunConfig l2 = c;
  l2.pretrain.loss = PretrainLoss::l2;
  CHECK(pretrain(fx.manifest, fx.labels, l2, "").model.checksum() != a.model.checksum());

  LabelStore partial;
  partial.add(fx.labels.records().front());
  CHECK_THROWS_AS(pretrain(fx.manifest, partial, c, ""), ValidationError);

  RunConfig every = c;
  every.pretrain.checkpoint_every = 1;
  pretrain(fx.manifest, fx.labels, every, fx.dir / "ep");
  CHECK(std::filesystem::exists(fx.dir / "ep" / "epoch-002"));
}

TEST_CASE("fine-tuning and linear probing") {
  Fixture fx;
  const RunConfig c = tiny_config();
  const auto pre = pretrain(fx.manifest, fx.labels, c, "");
  const Checkpoint start{pre.model, pre.manifest};

  const auto full = finetune(start, fx.manifest, c, fx.dir / "ft");
  CHECK(full.model.has_regressor());
  CHECK(full.model.checksum(full.model.backbone_range()) != pre.model.checksum(pre.model.backbone_range()));
  CHECK(load_checkpoint(fx.dir / "ft" / "final").manifest.stage == "finetune");

  RunConfig probe = c;
  probe.finetune.linear_probe = true;
  const auto lp = finetune(start, fx.manifest, probe, "");
  CHECK(lp.model.checksum(lp.model.backbone_range()) == pre.model.checksum(pre.model.backbone_range()));
  CHECK(lp.model.checksum(lp.model.heads_range()) == pre.model.checksum(pre.model.heads_range()));
  CHECK(lp.manifest.metrics.at("linear_probe") == true);

  RunConfig frozen = c;
  frozen.finetune.freeze_backbone = true;
  const auto fb = finetune(start, fx.manifest, frozen, "");
  CHECK(fb.model.checksum(fb.model.backbone_range()) == pre.model.checksum(pre.model.backbone_range()));
  CHECK(fb.model.checksum(fb.model.heads_range()) != pre.model.checksum(pre.model.heads_range()));

  TrainOptions jobs;
  jobs.jobs = 2;
  CHECK(finetune(start, fx.manifest, c, "", jobs).model.checksum() == full.model.checksum());

  DatasetManifest no_mos = fx.manifest;
  no_mos.records[0].mos.reset();
  CHECK_THROWS_AS(finetune(start, no_mos, c, ""), ValidationError);
}
