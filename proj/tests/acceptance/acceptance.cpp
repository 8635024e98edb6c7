// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "attiqa/checkpoint.hpp"
#include "attiqa/cli.hpp"
#include "attiqa/distortion.hpp"
#include "attiqa/error.hpp"
#include "attiqa/evaluation.hpp"
#include "attiqa/label_store.hpp"
#include "attiqa/metrics.hpp"
#include "attiqa/promptsel.hpp"
#include "attiqa/synthetic.hpp"
#include "attiqa/training.hpp"
#include "attiqa/vlm.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"
#include "support/tempdir.hpp"

using namespace attiqa;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// 1 -------------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  int with_ties = 0;
  int done = 0;
  while (done < 1000) {
    const std::size_t n = 3 + rng() % 48;
    const bool ties = std::bernoulli_distribution(0.3)(rng);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (ties) {
        x[i] = static_cast<double>(rng() % 5);
        y[i] = static_cast<double>(rng() % 7);
      } else {
        x[i] = std::normal_distribution<double>(0.0, 3.0)(rng);
        y[i] = std::normal_distribution<double>(1.0, 0.5)(rng) + 0.3 * x[i];
      }
    }
    std::set<double> sx(x.begin(), x.end()), sy(y.begin(), y.end());
    if (sx.size() < 2 || sy.size() < 2) continue;  // constant draw has no correlation
    worst = std::max(worst, std::abs(metrics::srocc(x, y).value - oracle::spearman(x, y)));
    worst = std::max(worst, std::abs(metrics::plcc(x, y).value - oracle::pearson(x, y)));
    with_ties += ties;
    ++done;
  }
  const double t = seconds_since(t0);
  return {worst < 1e-9 && t < 10.0,
          "max |diff| " + fmt("%.2e", worst) + " over 1000 vectors (" + std::to_string(with_ties) +
              " with ties), " + fmt("%.2f s", t)};
}

// 2 -------------------------------------------------------------------------

Outcome antonym_properties() {
  const double lo = oracle::logistic(-2.0);
  const double hi = oracle::logistic(2.0);
  bool symmetric = true;
  bool bounded = true;
  double worst_complement = 0.0;
  std::size_t cases = 0;
  for (int i = -100; i <= 100; ++i) {
    for (int j = -100; j <= 100; ++j) {
      const double a = i / 100.0;
      const double b = j / 100.0;
      const double s = antonym_score(a, b);
      worst_complement = std::max(worst_complement, std::abs(s + antonym_score(b, a) - 1.0));
      // Endpoints (+-1, -+1) reach the bounds exactly.
      if (s < lo - 1e-15 || s > hi + 1e-15) bounded = false;
      if (i == j && s != 0.5) symmetric = false;
      ++cases;
    }
  }
  return {symmetric && bounded && worst_complement <= 1e-12,
          std::to_string(cases) + " grid points, score(s,s)==0.5 " + (symmetric ? "always" : "NOT always") +
              ", max complement error " + fmt("%.1e", worst_complement) + ", range " +
              (bounded ? "within" : "outside") + " [logistic(-2), logistic(2)]"};
}

// 3 -------------------------------------------------------------------------

PerAttribute<double> single(double v) {
  PerAttribute<double> p;
  p.values.fill(0.5);
  p[Attribute::sharpness] = v;
  return p;
}

Outcome loss_units() {
  using training::indicator;
  using training::pair_ranking_loss;
  const bool ind = indicator(0.7, 0.3) == 0 && indicator(0.3, 0.7) == 1 && indicator(0.5, 0.5) == 1;
  PerAttribute<double> tied;
  tied.values.fill(0.6);
  PerAttribute<double> p1, p2;
  p1.values = {0.9, -0.3, 0.2, 0.0, 1.4};
  p2.values = {0.1, 0.8, 0.2, -2.0, 0.3};
  const double l1 = pair_ranking_loss(single(0.5), single(0.2), single(0.8), single(0.4), 0.1);
  const double l2 = pair_ranking_loss(single(0.30), single(0.25), single(0.8), single(0.4), 0.1);
  const double l3 = pair_ranking_loss(p1, p2, tied, tied, 0.1);
  // 0.1 - (0.30 - 0.25) evaluated in binary floating point.
  const double hinge = 0.1 - (0.30 - 0.25);
  const bool examples = l1 == 0.0 && l2 == hinge && std::abs(l2 - 0.05) < 1e-15 && l3 == 0.0;

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  int zero_cases = 0;
  for (int t = 0; t < 10000; ++t) {
    PerAttribute<double> e1, e2, s1, s2;
    bool separated = true;
    for (Attribute a : kAttributes) {
      // Coarse labels produce ties; predictions sometimes forced apart.
      s1[a] = std::round(u(rng) * 3) / 3;
      s2[a] = std::round(u(rng) * 3) / 3;
      e1[a] = u(rng);
      e2[a] = u(rng);
      if (u(rng) < 0.5) {
        const double gap = 0.1 + 0.3 * u(rng);
        if (s1[a] > s2[a]) e1[a] = e2[a] + gap;
        if (s2[a] > s1[a]) e2[a] = e1[a] + gap;
      }
      if (s1[a] > s2[a] && !(e1[a] - e2[a] >= 0.1)) separated = false;
      if (s2[a] > s1[a] && !(e2[a] - e1[a] >= 0.1)) separated = false;
    }
    const bool zero = pair_ranking_loss(e1, e2, s1, s2, 0.1) == 0.0;
    zero_cases += zero;
    if (zero != separated) ++violations;
  }
  return {ind && examples && violations == 0,
          std::string("indicator examples ") + (ind ? "ok" : "WRONG") + ", loss examples " +
              (examples ? "ok" : "WRONG") + " (" + fmt("%.17g", l2) + "), zero-iff-separated violations " +
              std::to_string(violations) + "/10000 (" + std::to_string(zero_cases) + " zero-loss cases)"};
}

// 4 -------------------------------------------------------------------------

Outcome gradient_check() {
  double worst_rank = 0.0;
  double worst_l2 = 0.0;
  int n_rank = 0;
  int n_l2 = 0;
  for (std::uint64_t seed = 1; (n_rank < 100 || n_l2 < 100) && seed < 5000; ++seed) {
    if (n_rank < 100) {
      if (const auto e = gradcheck::relative_error(seed, gradcheck::LossKind::ranking)) {
        worst_rank = std::max(worst_rank, *e);
        ++n_rank;
      }
    }
    if (n_l2 < 100) {
      if (const auto e = gradcheck::relative_error(seed, gradcheck::LossKind::l2)) {
        worst_l2 = std::max(worst_l2, *e);
        ++n_l2;
      }
    }
  }
  return {n_rank == 100 && n_l2 == 100 && worst_rank < 1e-4 && worst_l2 < 1e-4,
          "max relative error ranking " + fmt("%.2e", worst_rank) + " (" + std::to_string(n_rank) +
              " configs), l2 " + fmt("%.2e", worst_l2) + " (" + std::to_string(n_l2) + " configs), h=1e-5"};
}

// 5 -------------------------------------------------------------------------

Outcome distortion_bank() {
  const auto corpus = synthetic::procedural_corpus(20, 64, 5);
  bool identity = true;
  bool seeded = true;
  std::size_t ok = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < kNumDistortionKinds; ++k) {
    const auto kind = static_cast<DistortionKind>(k);
    const auto schedule = default_schedule(kind);
    const Attribute attr = attribute_of(kind);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const ImageRaster& img = corpus[i];
      if (is_stochastic(kind)) {
        for (std::size_t l = 0; l < schedule.levels(); ++l) {
          if (!apply_distortion(img, schedule, l, 1000 + i).same_pixels(apply_distortion(img, schedule, l, 1000 + i))) {
            seeded = false;
          }
        }
      } else if (!apply_distortion(img, kind, neutral_param(kind), 0).same_pixels(img)) {
        identity = false;
      }
      bool monotone = true;
      double prev = 0.0;
      for (std::size_t l = 0; l < schedule.levels(); ++l) {
        const double v = schedule.expected_direction * analytic_stats(apply_distortion(img, schedule, l, 31 * i))[attr];
        if (l > 0 && !(v > prev)) monotone = false;
        prev = v;
      }
      ok += monotone;
      ++total;
    }
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(total);
  return {identity && seeded && frac >= 0.95,
          std::string("neutral identity ") + (identity ? "exact" : "BROKEN") + ", seeded determinism " +
              (seeded ? "exact" : "BROKEN") + ", monotone " + std::to_string(ok) + "/" + std::to_string(total) +
              " (" + fmt("%.1f%%", 100.0 * frac) + ")"};
}

// 6 -------------------------------------------------------------------------

Outcome planted_selection(const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  synthetic::DatasetOptions o;
  o.name = "perception";
  o.count = 200;
  o.side = 64;
  o.seed = 606;
  const DatasetManifest annotated = synthetic::write_dataset(dir / "perception", o);
  const auto corpus = synthetic::procedural_corpus(20, 64, 607);
  const AnalyticMockProvider provider;
  const auto candidates = planted::candidate_file();
  const PromptSet expected = AnalyticMockProvider::planted_prompt_set();
  promptsel::SelectionOptions so;
  so.mode = promptsel::SelectionMode::joint;
  so.distortion.jobs = jobs();
  so.perception.jobs = jobs();

  std::string first_json;
  bool deterministic = true;
  int planted_hits = 0;
  std::string misses;
  for (int run = 0; run < 3; ++run) {
    const auto report = promptsel::select_prompts(candidates, corpus, &annotated, provider, so);
    const std::string j = report.to_json().dump();
    if (run == 0) {
      first_json = j;
      for (Attribute a : kAttributes) {
        if (report.attributes[a].chosen == expected.pairs[a]) {
          ++planted_hits;
        } else {
          misses += " " + std::string(to_string(a)) + "->" + report.attributes[a].chosen.positive + "/" +
                    report.attributes[a].chosen.negative;
        }
      }
    } else if (j != first_json) {
      deterministic = false;
    }
  }
  const double t = seconds_since(t0);
  return {planted_hits == 5 && deterministic && t < 120.0,
          "planted pair chosen for " + std::to_string(planted_hits) + "/5 attributes" + misses + ", 3 runs " +
              (deterministic ? "identical" : "DIFFER") + ", " + fmt("%.1f s", t)};
}

// 7 and 8 -------------------------------------------------------------------

struct DeskData {
  DatasetManifest train;
  DatasetManifest held_out;
  LabelStore labels;
};

DeskData make_desk_data(const std::filesystem::path& dir) {
  synthetic::DatasetOptions o;
  o.name = "desk-train";
  o.count = 500;
  o.side = 64;
  o.seed = 700;
  DeskData d;
  d.train = synthetic::write_dataset(dir / "train", o);
  o.name = "desk-heldout";
  o.count = 100;
  o.seed = 701;
  d.held_out = synthetic::write_dataset(dir / "heldout", o);
  const AnalyticMockProvider provider;
  const PromptSet prompts = AnalyticMockProvider::planted_prompt_set();
  LabelGenerationOptions lo;
  lo.jobs = jobs();
  generate_labels(d.train, prompts, provider, dir / "labels", lo);
  const auto summary = generate_labels(d.held_out, prompts, provider, dir / "labels", lo);
  d.labels = LabelStore::load(summary.store);
  return d;
}

std::vector<double> trailing_mean(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    double s = 0.0;
    for (std::size_t k = lo; k <= i; ++k) s += v[k];
    out.push_back(s / static_cast<double>(i + 1 - lo));
  }
  return out;
}

Outcome desk_pretrain(const std::filesystem::path& dir, DeskData& data) {
  const auto t0 = Clock::now();
  data = make_desk_data(dir);
  const RunConfig cfg = RunConfig::desk();
  training::TrainOptions to;
  to.jobs = jobs();
  to.provider_id = std::string(AnalyticMockProvider::kId);
  to.prompt_set_id = AnalyticMockProvider::planted_prompt_set().set_id;
  const auto result = training::pretrain(data.train, data.labels, cfg, dir / "pretrain", to);
  const double t = seconds_since(t0);

  const auto eval = evaluation::EvalOptions::from_config(cfg.eval);
  PerAttribute<std::vector<double>> pred, label;
  for (const auto& r : data.held_out.records) {
    const auto e = evaluation::predict_attributes(result.model, load_record_image(data.held_out, r), eval);
    for (Attribute a : kAttributes) {
      pred[a].push_back(e[a]);
      label[a].push_back(data.labels.at(r.image_id).scores[a]);
    }
  }
  bool all_ok = true;
  std::string per;
  for (Attribute a : kAttributes) {
    const double s = metrics::srocc(pred[a], label[a]).value;
    all_ok = all_ok && s >= 0.8;
    per += std::string(to_string(a)) + " " + fmt("%.3f", s) + " ";
  }
  const auto smooth = trailing_mean(result.epoch_loss, 5);
  std::vector<double> epochs;
  for (std::size_t i = 0; i < smooth.size(); ++i) epochs.push_back(static_cast<double>(i + 1));
  const double trend = metrics::srocc(epochs, smooth).value;
  const bool decreasing = smooth.size() == 30 && smooth.back() < smooth.front() && trend <= -0.9;
  return {all_ok && decreasing && t < 300.0,
          "held-out SROCC " + per + "| smoothed loss " + fmt("%.4f", smooth.front()) + " -> " +
              fmt("%.4f", smooth.back()) + " (trend SROCC " + fmt("%.3f", trend) + "), " + fmt("%.1f s", t)};
}

Outcome desk_finetune(const std::filesystem::path& dir, const DeskData& data) {
  const auto t0 = Clock::now();
  const Checkpoint start = load_checkpoint(dir / "pretrain" / "final");
  RunConfig cfg = RunConfig::desk();
  training::TrainOptions to;
  to.jobs = jobs();
  const auto eval = evaluation::EvalOptions::from_config(cfg.eval);

  const auto full = training::finetune(start, data.train, cfg, dir / "finetune", to);
  const auto full_report = evaluation::evaluate(full.model, data.held_out, eval);

  cfg.finetune.linear_probe = true;
  const auto probe = training::finetune(start, data.train, cfg, dir / "probe", to);
  const auto probe_report = evaluation::evaluate(probe.model, data.held_out, eval);
  const double t = seconds_since(t0);

  const auto& m0 = start.model;
  const auto& m1 = probe.model;
  const bool frozen = m1.checksum(m1.backbone_range()) == m0.checksum(m0.backbone_range()) &&
                      m1.checksum(m1.heads_range()) == m0.checksum(m0.heads_range());
  const double s_full = full_report.srocc.value_or(-1.0);
  const double s_probe = probe_report.srocc.value_or(-1.0);
  return {s_full >= 0.8 && frozen && s_probe >= 0.6 && t < 180.0,
          "fine-tune test SROCC " + fmt("%.3f", s_full) + ", linear probe " + fmt("%.3f", s_probe) +
              " with backbone/head checksums " + (frozen ? "unchanged" : "CHANGED") + ", " + fmt("%.1f s", t)};
}

// 9 -------------------------------------------------------------------------

Outcome protocol_fidelity(const std::filesystem::path& dir) {
  std::vector<std::string> failures;
  for (std::size_t n : {2u, 5u, 7u, 10u, 33u, 100u, 101u, 999u}) {
    DatasetManifest m;
    m.name = "n";
    for (std::size_t i = 0; i < n; ++i) m.records.push_back({"r" + std::to_string(i), "p", 1.0, {}, {}});
    const auto s = split_dataset(m, 0.8, 3);
    const std::size_t expect = (n * 8) / 10;
    std::set<std::string> ids;
    for (const auto& r : s.train.records) ids.insert(r.image_id);
    for (const auto& r : s.test.records) ids.insert(r.image_id);
    if (s.train.size() != expect || s.test.size() != n - expect || ids.size() != n) {
      failures.push_back("split N=" + std::to_string(n));
    }
  }

  synthetic::DatasetOptions o;
  o.name = "protocol";
  o.count = 30;
  o.side = 24;
  o.seed = 909;
  const DatasetManifest m = synthetic::write_dataset(dir / "protocol", o);
  ModelSpec spec;
  spec.channels = {4, 8};
  spec.head_hidden = 8;
  evaluation::EvalOptions eval;
  eval.five_crop = true;
  eval.resize_short = 24;
  eval.crop = 20;
  // Each split gets a model seeded from its split seed, so the training
  // function is a pure function of (train split, seed).
  const evaluation::TrainFn train = [&](const DatasetManifest&, std::uint64_t seed) {
    auto model = AttributeModel::init(spec, seed);
    model.attach_regressor(8, seed + 1);
    return model;
  };
  const auto a = evaluation::run_protocol(m, eval, train, 42);
  const auto b = evaluation::run_protocol(m, eval, train, 42);
  if (a.to_json() != b.to_json()) failures.push_back("protocol not reproducible");
  std::vector<double> sr, pl;
  for (std::uint64_t seed : ten_split_seeds(42)) {
    const auto split = split_dataset(m, 0.8, seed);
    const auto r = evaluation::evaluate(train(split.train, seed), split.test, eval);
    sr.push_back(*r.srocc);
    pl.push_back(*r.plcc);
  }
  if (a.split_srocc.size() != 10 || a.split_srocc != sr || *a.srocc != metrics::median(sr) ||
      *a.plcc != metrics::median(pl)) {
    failures.push_back("headline is not the median of recomputed splits");
  }

  const auto off = evaluation::five_crop_offsets(340, 340, 320);
  const std::array<evaluation::CropOffset, 5> expected{{{0, 0}, {0, 20}, {20, 0}, {20, 20}, {10, 10}}};
  if (off != expected) failures.push_back("five-crop offsets");

  auto constant = AttributeModel::init(spec, 1);
  constant.attach_regressor(8, 2);
  const ParamRange r = constant.regressor_range();
  const std::size_t first_layer = static_cast<std::size_t>(spec.feature_dim()) * 8;
  for (std::size_t i = r.offset; i < r.offset + first_layer; ++i) constant.parameters()[i] = 0.0;
  for (std::size_t i = r.offset + first_layer; i < r.end(); ++i) constant.parameters()[i] = 0.173;
  std::size_t invariant = 0;
  for (const auto& rec : m.records) {
    const ImageRaster img = load_record_image(m, rec);
    evaluation::EvalOptions single = eval;
    single.five_crop = false;
    invariant += evaluation::predict_mos(constant, img, eval) == evaluation::predict_mos(constant, img, single);
  }
  if (invariant != m.size()) failures.push_back("constant-model five-crop invariance");

  std::string detail = "splits floor(0.8N), 10-split reproducibility, medians, offsets, constant invariance";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

// 10 ------------------------------------------------------------------------

Outcome full_recipe(const std::filesystem::path& dir) {
  const std::string cfg = (std::filesystem::path(ATTIQA_SOURCE_DIR) / "data/configs/full.json").string();
  const RunConfig full = load_run_config(cfg);
  full.validate();
  std::ostringstream out, err;
  const int pre = cli::dispatch({"attiqa", "pretrain", "--dry-run", "--config", cfg, "--out", (dir / "dry-pre").string()},
                                out, err);
  const int fin = cli::dispatch({"attiqa", "finetune", "--dry-run", "--config", cfg, "--out", (dir / "dry-ft").string()},
                                out, err);
  if (pre != 0 || fin != 0) return {false, "dry run failed: " + err.str()};

  std::vector<std::string> missing;
  for (const char* sub : {"dry-pre", "dry-ft"}) {
    std::ifstream in(dir / sub / "run_manifest.json");
    const auto m = nlohmann::json::parse(in);
    const auto& c = m.at("config");
    const auto check = [&](bool ok, const std::string& what) {
      if (!ok) missing.push_back(std::string(sub) + ":" + what);
    };
    check(m.at("dry_run") == true, "dry_run");
    check(c.at("pretrain").at("margin") == 0.1, "margin");
    check(c.at("model").at("head_hidden") == 512, "head_hidden");
    check(c.at("pretrain").at("batch") == 256, "pretrain batch");
    check(c.at("pretrain").at("epochs") == 100, "pretrain epochs");
    check(c.at("pretrain").at("lr_milestones") == nlohmann::json::array({60, 80}), "milestones");
    check(c.at("pretrain").at("lr_decay") == 0.1, "decay");
    check(c.at("finetune").at("resize_short") == 340, "finetune resize");
    check(c.at("finetune").at("crop") == 320, "finetune crop");
    check(c.at("finetune").at("schedule") == "cosine", "cosine");
    std::set<double> lrs{c.at("finetune").at("lr").get<double>()};
    for (const auto& [name, lr] : c.at("finetune").at("lr_by_dataset").items()) lrs.insert(lr.get<double>());
    check(lrs == std::set<double>{1e-4, 5e-5, 1e-5}, "lr set");
    check(m.at("config_hash") == full.hash(), "config hash");
  }
  std::string detail = "full-scale recipe round-trips validation and appears verbatim in both dry-run manifests";
  if (!missing.empty()) {
    detail = "missing:";
    for (const auto& s : missing) detail += " " + s;
  }
  return {missing.empty(), detail};
}

}  // namespace

int main() {
  TempDir dir("attiqa-acceptance");
  DeskData desk;
  bool pretrained = false;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracles", metric_oracles},
      {"antonym score properties", antonym_properties},
      {"indicator and ranking loss", loss_units},
      {"gradient check", gradient_check},
      {"distortion bank", distortion_bank},
      {"planted prompt selection", [&] { return planted_selection(dir.path()); }},
      {"desk pretraining", [&] {
         auto o = desk_pretrain(dir.path(), desk);
         pretrained = true;
         return o;
       }},
      {"desk fine-tuning", [&] {
         if (!pretrained) return Outcome{false, "no pretrained checkpoint"};
         return desk_finetune(dir.path(), desk);
       }},
      {"protocol fidelity", [&] { return protocol_fidelity(dir.path()); }},
      {"full-scale recipe dry run", [&] { return full_recipe(dir.path()); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
