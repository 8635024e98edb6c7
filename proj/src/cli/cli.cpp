#include "attiqa/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "attiqa/checkpoint.hpp"
#include "attiqa/distortion.hpp"
#include "attiqa/error.hpp"
#include "attiqa/evaluation.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/label_store.hpp"
#include "attiqa/promptsel.hpp"
#include "attiqa/synthetic.hpp"
#include "attiqa/training.hpp"
#include "attiqa/vlm.hpp"

namespace attiqa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

/// Provenance record written next to every output.
class RunManifest {
 public:
  RunManifest(std::string command, const std::vector<std::string>& argv) : started_(utc_now()) {
    j_["command"] = std::move(command);
    j_["argv"] = argv;
    j_["tool_version"] = kToolVersion;
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
  }

  void input(const fs::path& p) {
    json entry{{"path", p.string()}};
    if (fs::is_regular_file(p)) {
      entry["sha256"] = sha256_file(p);
    } else if (fs::is_directory(p)) {
      // Directory inputs (checkpoints, image folders): hash of sorted file digests.
      std::vector<std::string> lines;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) {
          lines.push_back(fs::relative(e.path(), p).string() + " " + sha256_file(e.path()));
        }
      }
      std::sort(lines.begin(), lines.end());
      std::string all;
      for (const auto& l : lines) all += l + "\n";
      entry["sha256"] = sha256_hex(all);
      entry["kind"] = "directory";
    }
    j_["inputs"].push_back(std::move(entry));
  }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void config(const RunConfig& c) {
    j_["config"] = c.to_json();
    j_["config_hash"] = c.hash();
  }
  void set(const std::string& key, json v) { j_[key] = std::move(v); }
  void seed(std::uint64_t s) { j_["seed"] = s; }

  void write(const fs::path& path) {
    j_["started_at"] = started_;
    j_["finished_at"] = utc_now();
    write_json(path, j_);
  }

 private:
  std::string started_;
  json j_;
};

fs::path run_manifest_for_file(const fs::path& out) { return out.string() + ".run.json"; }
fs::path run_manifest_for_dir(const fs::path& dir) { return dir / "run_manifest.json"; }

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string config;
};

/// Config file (with optional preset) or the given fallback; --seed wins.
RunConfig resolve_config(const Globals& g, const std::optional<RunConfig>& fallback = std::nullopt) {
  RunConfig c = !g.config.empty() ? load_run_config(g.config) : fallback ? *fallback : RunConfig::desk();
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

RunConfig config_from_checkpoint(const Checkpoint& ck) {
  if (ck.manifest.config.is_object() && !ck.manifest.config.empty()) {
    return RunConfig::from_json(ck.manifest.config, RunConfig::desk());
  }
  return RunConfig::desk();
}

std::vector<ImageRaster> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no PNG images in " + dir.string());
  std::vector<ImageRaster> out;
  for (const auto& f : files) out.push_back(load_png(f, f.stem().string()));
  return out;
}

// ---- subcommands -----------------------------------------------------------

struct SelectArgs {
  std::string candidates, images, perception, provider = "analytic-mock", mode, out;
  bool procedural = false;
};

int run_select(const SelectArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunConfig cfg = resolve_config(g);
  RunManifest rm("select-prompts", argv);
  const auto candidates = promptsel::load_candidates(a.candidates);
  rm.input(a.candidates);
  std::vector<ImageRaster> images;
  if (!a.images.empty()) {
    images = load_image_dir(a.images);
    rm.input(a.images);
  } else if (a.procedural) {
    images = synthetic::procedural_corpus(static_cast<std::size_t>(cfg.selection.corpus_size), 64, cfg.seed);
  }
  std::optional<DatasetManifest> annotated;
  if (!a.perception.empty()) {
    annotated = load_manifest(a.perception);
    rm.input(a.perception);
  }
  const auto provider = make_provider(a.provider);
  promptsel::SelectionOptions opts;
  opts.mode = promptsel::parse_selection_mode(a.mode.empty() ? cfg.selection.mode : a.mode);
  opts.distortion = {cfg.seed, cfg.scoring.temperature, g.jobs};
  opts.perception = {static_cast<std::size_t>(cfg.selection.perception_cap), cfg.seed, cfg.scoring.temperature, g.jobs};
  const auto report =
      promptsel::select_prompts(candidates, images, annotated ? &*annotated : nullptr, *provider, opts);
  write_json(a.out, report.to_json());
  for (Attribute attr : kAttributes) {
    const auto& s = report.attributes[attr];
    out << to_string(attr) << ": \"" << s.chosen.positive << "\" / \"" << s.chosen.negative << "\" score " << s.score
        << '\n';
  }
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.set("provider", a.provider);
  rm.output(a.out);
  rm.write(run_manifest_for_file(a.out));
  return 0;
}

struct GenLabelsArgs {
  std::string manifest, prompts, provider = "analytic-mock", out;
};

int run_gen_labels(const GenLabelsArgs& a, const Globals& g, const std::vector<std::string>& argv,
                   std::ostream& out) {
  RunConfig cfg = resolve_config(g);
  RunManifest rm("gen-labels", argv);
  const DatasetManifest m = load_manifest(a.manifest);
  rm.input(a.manifest);
  const PromptSet prompts = load_prompt_set(a.prompts);
  rm.input(a.prompts);
  const auto provider = make_provider(a.provider);
  const auto summary = generate_labels(m, prompts, *provider, a.out, {cfg.scoring.temperature, g.jobs});
  out << "label store " << summary.store.string() << ": " << summary.written << " written, "
      << summary.already_present << " already present, " << summary.unreadable << " unreadable\n";
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.set("provider", a.provider);
  rm.set("prompt_set", prompts.set_id);
  rm.output(summary.store);
  rm.write(summary.store.string() + ".run.json");
  return 0;
}

struct PretrainArgs {
  std::string manifest, labels, out, loss;
  bool dry_run = false;
};

int run_pretrain(const PretrainArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunConfig cfg = resolve_config(g);
  if (!a.loss.empty()) {
    if (a.loss == "ranking") {
      cfg.pretrain.loss = PretrainLoss::ranking;
    } else if (a.loss == "l2") {
      cfg.pretrain.loss = PretrainLoss::l2;
    } else {
      throw ValidationError("--loss must be ranking or l2");
    }
  }
  cfg.validate();
  RunManifest rm("pretrain", argv);
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.set("dry_run", a.dry_run);
  if (a.dry_run) {
    for (const auto& p : {a.manifest, a.labels}) {
      if (!p.empty()) rm.input(p);
    }
    fs::create_directories(a.out);
    out << "dry run: configuration valid (hash " << cfg.hash() << ")\n";
    rm.write(run_manifest_for_dir(a.out));
    return 0;
  }
  if (a.manifest.empty() || a.labels.empty()) throw ValidationError("pretrain needs --manifest and --labels");
  const DatasetManifest m = load_manifest(a.manifest);
  rm.input(a.manifest);
  const LabelStore labels = LabelStore::load(a.labels);
  rm.input(a.labels);
  training::TrainOptions opts;
  opts.jobs = g.jobs;
  opts.log = &out;
  const auto result = training::pretrain(m, labels, cfg, a.out, opts);
  rm.output(fs::path(a.out) / "final");
  rm.output(fs::path(a.out) / "loss_history.csv");
  rm.set("final_epoch_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back());
  rm.write(run_manifest_for_dir(a.out));
  return 0;
}

struct FinetuneArgs {
  std::string ckpt, manifest, out;
  bool linear_probe = false;
  bool freeze_backbone = false;
  bool dry_run = false;
};

int run_finetune(const FinetuneArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest rm("finetune", argv);
  std::optional<Checkpoint> ck;
  std::optional<RunConfig> fallback;
  if (!a.ckpt.empty() && !(a.dry_run && !fs::exists(a.ckpt))) {
    ck = load_checkpoint(a.ckpt);
    fallback = config_from_checkpoint(*ck);
  }
  RunConfig cfg = resolve_config(g, fallback);
  if (a.linear_probe) cfg.finetune.linear_probe = true;
  if (a.freeze_backbone) cfg.finetune.freeze_backbone = true;
  cfg.validate();
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.set("dry_run", a.dry_run);
  if (a.dry_run) {
    for (const auto& p : {a.ckpt, a.manifest}) {
      if (!p.empty() && fs::exists(p)) rm.input(p);
    }
    fs::create_directories(a.out);
    out << "dry run: configuration valid (hash " << cfg.hash() << ")\n";
    rm.write(run_manifest_for_dir(a.out));
    return 0;
  }
  if (!ck || a.manifest.empty()) throw ValidationError("finetune needs --ckpt and --manifest");
  rm.input(a.ckpt);
  const DatasetManifest m = load_manifest(a.manifest);
  rm.input(a.manifest);
  training::TrainOptions opts;
  opts.jobs = g.jobs;
  opts.log = &out;
  const auto result = training::finetune(*ck, m, cfg, a.out, opts);
  rm.set("learning_rate", cfg.finetune_lr_for(m.name));
  rm.output(fs::path(a.out) / "final");
  rm.output(fs::path(a.out) / "loss_history.csv");
  rm.write(run_manifest_for_dir(a.out));
  return 0;
}

struct EvalArgs {
  std::string ckpt, manifest, out;
  bool five_crop = false;
  bool single_crop = false;
};

evaluation::EvalOptions eval_options(const RunConfig& cfg, bool five, bool single, std::size_t jobs) {
  auto o = evaluation::EvalOptions::from_config(cfg.eval);
  if (five) o.five_crop = true;
  if (single) o.five_crop = false;
  o.jobs = jobs;
  return o;
}

int run_evaluate(const EvalArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest rm("evaluate", argv);
  const Checkpoint ck = load_checkpoint(a.ckpt);
  rm.input(a.ckpt);
  const RunConfig cfg = resolve_config(g, config_from_checkpoint(ck));
  const DatasetManifest m = load_manifest(a.manifest);
  rm.input(a.manifest);
  const auto report = evaluation::evaluate(ck.model, m, eval_options(cfg, a.five_crop, a.single_crop, g.jobs));
  write_json(a.out, report.to_json());
  if (report.error) {
    out << m.name << ": " << *report.error << '\n';
  } else {
    out << m.name << ": SROCC " << *report.srocc << "  PLCC " << *report.plcc << "  (n=" << report.n << ")\n";
  }
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.output(a.out);
  rm.write(run_manifest_for_file(a.out));
  return 0;
}

struct CrossArgs {
  std::string ckpt, test, out;
  bool five_crop = false;
  bool single_crop = false;
};

int run_crossval(const CrossArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out,
                 std::ostream& err) {
  RunManifest rm("crossval", argv);
  const Checkpoint ck = load_checkpoint(a.ckpt);
  rm.input(a.ckpt);
  const RunConfig cfg = resolve_config(g, config_from_checkpoint(ck));
  const DatasetManifest m = load_manifest(a.test);
  rm.input(a.test);
  const auto report =
      evaluation::cross_dataset(ck.model, ck.manifest.dataset, m, eval_options(cfg, a.five_crop, a.single_crop, g.jobs));
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  write_json(a.out, report.to_json());
  if (report.error) {
    out << m.name << ": " << *report.error << '\n';
  } else {
    out << ck.manifest.dataset << " -> " << m.name << ": SROCC " << *report.srocc << " (n=" << report.n << ")\n";
  }
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.output(a.out);
  rm.write(run_manifest_for_file(a.out));
  return 0;
}

struct PairsArgs {
  std::string ckpt, pairs, out;
  bool five_crop = false;
  bool single_crop = false;
};

int run_compare_pairs(const PairsArgs& a, const Globals& g, const std::vector<std::string>& argv,
                      std::ostream& out) {
  RunManifest rm("compare-pairs", argv);
  const Checkpoint ck = load_checkpoint(a.ckpt);
  rm.input(a.ckpt);
  const RunConfig cfg = resolve_config(g, config_from_checkpoint(ck));
  const auto bench = evaluation::load_pairwise_benchmark(a.pairs);
  rm.input(a.pairs);
  const auto result =
      evaluation::compare_pairs(ck.model, bench, eval_options(cfg, a.five_crop, a.single_crop, g.jobs));
  write_json(a.out, result.to_json());
  out << "agreement " << result.agreement << " (" << result.agreed << "/" << result.n << ", ties " << result.ties
      << ")\n";
  rm.config(cfg);
  rm.seed(cfg.seed);
  rm.output(a.out);
  rm.write(run_manifest_for_file(a.out));
  return 0;
}

struct DistortArgs {
  std::string image, kind, out;
  std::size_t level = 0;
  bool eight_bit = false;
};

int run_distort(const DistortArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest rm("distort", argv);
  const std::uint64_t seed = g.seed.value_or(0);
  const ImageRaster img = load_png(a.image);
  rm.input(a.image);
  const DistortionKind kind = parse_distortion_kind(a.kind);
  const ImageRaster result = apply_distortion(img, kind, a.level, seed);
  save_png(result, a.out, a.eight_bit);
  out << "wrote " << a.out << '\n';
  rm.seed(seed);
  rm.set("distortion", {{"kind", a.kind}, {"level", a.level}});
  rm.output(a.out);
  rm.write(run_manifest_for_file(a.out));
  return 0;
}

struct SynthArgs {
  std::string out, name = "synthetic";
  std::size_t count = 100;
  std::size_t side = 64;
  bool no_mos = false;
  bool no_attributes = false;
};

int run_synth(const SynthArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest rm("synth", argv);
  synthetic::DatasetOptions o;
  o.name = a.name;
  o.count = a.count;
  o.side = a.side;
  o.seed = g.seed.value_or(0);
  o.with_mos = !a.no_mos;
  o.with_attributes = !a.no_attributes;
  const DatasetManifest m = synthetic::write_dataset(a.out, o);
  const fs::path manifest_path = fs::path(a.out) / (a.name + ".jsonl");
  out << "wrote " << m.size() << " images and " << manifest_path.string() << '\n';
  rm.seed(o.seed);
  rm.output(manifest_path);
  rm.write(run_manifest_for_dir(a.out));
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribute-aware image quality assessment pipeline", "attiqa"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kToolVersion);

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Run configuration JSON")->check(CLI::ExistingFile);
  // Subcommands inherit this, so global flags may also follow the subcommand name.
  app.fallthrough();

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select-prompts", "Choose an antonym prompt pair per attribute");
  c_sel->add_option("--candidates", sel.candidates, "Candidate adjective file")->required()->check(CLI::ExistingFile);
  c_sel->add_option("--images", sel.images, "Directory of PNGs for the distortion task")->check(CLI::ExistingDirectory);
  c_sel->add_flag("--procedural-images", sel.procedural, "Use the built-in procedural corpus for the distortion task");
  c_sel->add_option("--perception", sel.perception, "Manifest with attribute annotations")->check(CLI::ExistingFile);
  c_sel->add_option("--provider", sel.provider, "Embedding provider id");
  c_sel->add_option("--mode", sel.mode, "joint | distortion | perception");
  c_sel->add_option("--out", sel.out, "Selection report JSON")->required();

  GenLabelsArgs gen;
  auto* c_gen = app.add_subcommand("gen-labels", "Score every image with the chosen prompt set");
  c_gen->add_option("--manifest", gen.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--prompts", gen.prompts, "Prompt set or selection report")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--provider", gen.provider, "Embedding provider id");
  c_gen->add_option("--out", gen.out, "Label store directory")->required();

  PretrainArgs pre;
  auto* c_pre = app.add_subcommand("pretrain", "Attribute pretraining on pseudo-labels");
  c_pre->add_option("--manifest", pre.manifest, "Dataset manifest")->check(CLI::ExistingFile);
  c_pre->add_option("--labels", pre.labels, "Label store file")->check(CLI::ExistingFile);
  c_pre->add_option("--out", pre.out, "Output directory")->required();
  c_pre->add_option("--loss", pre.loss, "ranking | l2");
  c_pre->add_flag("--dry-run", pre.dry_run, "Validate and record the configuration without training");

  FinetuneArgs fin;
  auto* c_fin = app.add_subcommand("finetune", "MOS fine-tuning from a pretrained checkpoint");
  c_fin->add_option("--ckpt", fin.ckpt, "Checkpoint directory");
  c_fin->add_option("--manifest", fin.manifest, "Manifest with MOS")->check(CLI::ExistingFile);
  c_fin->add_option("--out", fin.out, "Output directory")->required();
  c_fin->add_flag("--linear-probe", fin.linear_probe, "Train only the regressor");
  c_fin->add_flag("--freeze-backbone", fin.freeze_backbone, "Keep the backbone fixed");
  c_fin->add_flag("--dry-run", fin.dry_run, "Validate and record the configuration without training");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "SROCC/PLCC against MOS");
  c_ev->add_option("--ckpt", ev.ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--manifest", ev.manifest, "Manifest with MOS")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev.out, "Report JSON")->required();
  c_ev->add_flag("--five-crop", ev.five_crop, "Average five crops");
  c_ev->add_flag("--single-crop", ev.single_crop, "Center crop only");

  CrossArgs cx;
  auto* c_cx = app.add_subcommand("crossval", "SROCC on a dataset unseen in training");
  c_cx->add_option("--ckpt", cx.ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  c_cx->add_option("--test", cx.test, "Test manifest with MOS")->required()->check(CLI::ExistingFile);
  c_cx->add_option("--out", cx.out, "Report JSON")->required();
  c_cx->add_flag("--five-crop", cx.five_crop, "Average five crops");
  c_cx->add_flag("--single-crop", cx.single_crop, "Center crop only");

  PairsArgs pp;
  auto* c_pp = app.add_subcommand("compare-pairs", "Agreement with pairwise human preferences");
  c_pp->add_option("--ckpt", pp.ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  c_pp->add_option("--pairs", pp.pairs, "Pairwise benchmark JSONL")->required()->check(CLI::ExistingFile);
  c_pp->add_option("--out", pp.out, "Result JSON")->required();
  c_pp->add_flag("--five-crop", pp.five_crop, "Average five crops");
  c_pp->add_flag("--single-crop", pp.single_crop, "Center crop only");

  DistortArgs dis;
  auto* c_dis = app.add_subcommand("distort", "Apply one distortion level to an image");
  c_dis->add_option("--image", dis.image, "Input PNG")->required()->check(CLI::ExistingFile);
  c_dis->add_option("--kind", dis.kind, "Distortion kind")->required();
  c_dis->add_option("--level", dis.level, "Level index")->required();
  c_dis->add_option("--out", dis.out, "Output PNG")->required();
  c_dis->add_flag("--8bit", dis.eight_bit, "Write 8-bit PNG");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Write a synthetic dataset with MOS and attribute annotations");
  c_syn->add_option("--out", syn.out, "Output directory")->required();
  c_syn->add_option("--name", syn.name, "Dataset name");
  c_syn->add_option("--count", syn.count, "Number of images")->check(CLI::PositiveNumber);
  c_syn->add_option("--side", syn.side, "Image side in pixels")->check(CLI::Range(8, 4096));
  c_syn->add_flag("--no-mos", syn.no_mos, "Omit MOS");
  c_syn->add_flag("--no-attributes", syn.no_attributes, "Omit attribute annotations");

  std::vector<std::string> args = argv;
  if (args.empty()) args.emplace_back("attiqa");
  std::vector<char*> cargs;
  for (auto& s : args) cargs.push_back(s.data());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto rest = app.remaining();
    const auto subs = app.get_subcommands();
    if (!rest.empty() && subs.empty()) {
      err << "error: unknown subcommand \"" << rest.front() << "\"\n\n" << app.help();
      return 1;
    }
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*c_sel) return run_select(sel, g, argv, out);
    if (*c_gen) return run_gen_labels(gen, g, argv, out);
    if (*c_pre) return run_pretrain(pre, g, argv, out);
    if (*c_fin) return run_finetune(fin, g, argv, out);
    if (*c_ev) return run_evaluate(ev, g, argv, out);
    if (*c_cx) return run_crossval(cx, g, argv, out, err);
    if (*c_pp) return run_compare_pairs(pp, g, argv, out);
    if (*c_dis) return run_distort(dis, g, argv, out);
    if (*c_syn) return run_synth(syn, g, argv, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace attiqa::cli
