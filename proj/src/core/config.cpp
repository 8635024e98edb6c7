#include "attiqa/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"

namespace attiqa {

using nlohmann::json;

std::string_view to_string(PairSampler v) { return v == PairSampler::derangement ? "derangement" : "exhaustive"; }
std::string_view to_string(PretrainLoss v) { return v == PretrainLoss::ranking ? "ranking" : "l2"; }
std::string_view to_string(RankingOrientation v) {
  return v == RankingOrientation::corrected ? "corrected" : "literal";
}
std::string_view to_string(LrSchedule) { return "cosine"; }
std::string_view to_string(FinetuneLoss v) {
  return v == FinetuneLoss::squared_error ? "squared_error" : "absolute_error";
}

namespace {

/// Reads fields from one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config section \"" + path_ + "\" must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config key \"" + path_ + "." + key + "\" has the wrong type");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, std::initializer_list<E> options) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) throw ValidationError("config key \"" + path_ + "." + key + "\" must be a string");
    const auto s = j_.at(key).get<std::string>();
    for (E e : options) {
      if (to_string(e) == s) {
        out = e;
        return;
      }
    }
    throw ValidationError("config key \"" + path_ + "." + key + "\" has unknown value \"" + s + "\"");
  }

  const json* section(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!used_.count(k)) {
        throw ValidationError("unknown config key \"" + (path_.empty() ? k : path_ + "." + k) + "\"");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("invalid config: " + message);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

RunConfig RunConfig::full() {
  RunConfig c;
  c.model.backbone = "external:resnet50";
  return c;
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.model.backbone = "desk_cnn";
  c.model.channels = {16, 32, 48, 64};
  c.model.head_hidden = 512;
  c.model.reg_hidden = 512;

  c.pretrain.resize_short = 64;
  c.pretrain.crop = 56;
  c.pretrain.batch = 32;
  c.pretrain.epochs = 30;
  c.pretrain.lr = 1e-3;
  c.pretrain.lr_milestones = {20, 26};
  c.pretrain.lr_decay = 0.1;

  c.finetune.resize_short = 64;
  c.finetune.crop = 56;
  c.finetune.batch = 32;
  c.finetune.epochs = 10;
  c.finetune.lr = 5e-4;
  c.finetune.lr_by_dataset.clear();

  c.eval.five_crop = true;
  c.eval.resize_short = 64;
  c.eval.crop = 56;

  c.selection.corpus_size = 20;
  c.selection.perception_cap = 1000;
  return c;
}

RunConfig RunConfig::from_json(const json& j, const RunConfig& base) {
  RunConfig c = base;
  Reader root(j, "");
  root.get("seed", c.seed);
  if (const json* s = root.section("model")) {
    Reader r(*s, "model");
    r.get("backbone", c.model.backbone);
    r.get("channels", c.model.channels);
    r.get("head_hidden", c.model.head_hidden);
    r.get("reg_hidden", c.model.reg_hidden);
    r.finish();
  }
  if (const json* s = root.section("pretrain")) {
    Reader r(*s, "pretrain");
    auto& p = c.pretrain;
    r.get("resize_short", p.resize_short);
    r.get("crop", p.crop);
    r.get("batch", p.batch);
    r.get("epochs", p.epochs);
    r.get("lr", p.lr);
    r.get("weight_decay", p.weight_decay);
    r.get("lr_milestones", p.lr_milestones);
    r.get("lr_decay", p.lr_decay);
    r.get("margin", p.margin);
    r.get_enum("pair_sampler", p.pair_sampler, {PairSampler::derangement, PairSampler::exhaustive});
    r.get_enum("loss", p.loss, {PretrainLoss::ranking, PretrainLoss::l2});
    r.get_enum("orientation", p.orientation, {RankingOrientation::corrected, RankingOrientation::literal});
    r.get("checkpoint_every", p.checkpoint_every);
    r.finish();
  }
  if (const json* s = root.section("finetune")) {
    Reader r(*s, "finetune");
    auto& f = c.finetune;
    r.get("resize_short", f.resize_short);
    r.get("crop", f.crop);
    r.get("batch", f.batch);
    r.get("epochs", f.epochs);
    r.get("lr", f.lr);
    r.get("lr_by_dataset", f.lr_by_dataset);
    r.get("weight_decay", f.weight_decay);
    r.get_enum("schedule", f.schedule, {LrSchedule::cosine});
    r.get("linear_probe", f.linear_probe);
    r.get("freeze_backbone", f.freeze_backbone);
    r.get_enum("loss", f.loss, {FinetuneLoss::squared_error, FinetuneLoss::absolute_error});
    r.finish();
  }
  if (const json* s = root.section("eval")) {
    Reader r(*s, "eval");
    r.get("five_crop", c.eval.five_crop);
    r.get("resize_short", c.eval.resize_short);
    r.get("crop", c.eval.crop);
    r.finish();
  }
  if (const json* s = root.section("scoring")) {
    Reader r(*s, "scoring");
    r.get("temperature", c.scoring.temperature);
    r.finish();
  }
  if (const json* s = root.section("selection")) {
    Reader r(*s, "selection");
    r.get("mode", c.selection.mode);
    r.get("corpus_size", c.selection.corpus_size);
    r.get("perception_cap", c.selection.perception_cap);
    r.finish();
  }
  root.section("preset");
  root.finish();
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["model"] = {{"backbone", model.backbone},
                {"channels", model.channels},
                {"head_hidden", model.head_hidden},
                {"reg_hidden", model.reg_hidden}};
  j["pretrain"] = {{"resize_short", pretrain.resize_short},
                   {"crop", pretrain.crop},
                   {"batch", pretrain.batch},
                   {"epochs", pretrain.epochs},
                   {"lr", pretrain.lr},
                   {"weight_decay", pretrain.weight_decay},
                   {"lr_milestones", pretrain.lr_milestones},
                   {"lr_decay", pretrain.lr_decay},
                   {"margin", pretrain.margin},
                   {"pair_sampler", to_string(pretrain.pair_sampler)},
                   {"loss", to_string(pretrain.loss)},
                   {"orientation", to_string(pretrain.orientation)},
                   {"checkpoint_every", pretrain.checkpoint_every}};
  j["finetune"] = {{"resize_short", finetune.resize_short},
                   {"crop", finetune.crop},
                   {"batch", finetune.batch},
                   {"epochs", finetune.epochs},
                   {"lr", finetune.lr},
                   {"lr_by_dataset", finetune.lr_by_dataset},
                   {"weight_decay", finetune.weight_decay},
                   {"schedule", to_string(finetune.schedule)},
                   {"linear_probe", finetune.linear_probe},
                   {"freeze_backbone", finetune.freeze_backbone},
                   {"loss", to_string(finetune.loss)}};
  j["eval"] = {{"five_crop", eval.five_crop}, {"resize_short", eval.resize_short}, {"crop", eval.crop}};
  j["scoring"] = {{"temperature", scoring.temperature}};
  j["selection"] = {{"mode", selection.mode},
                    {"corpus_size", selection.corpus_size},
                    {"perception_cap", selection.perception_cap}};
  return j;
}

void RunConfig::validate() const {
  require(!model.backbone.empty(), "model.backbone is empty");
  require(model.backbone == "desk_cnn" || model.backbone.rfind("external:", 0) == 0,
          "model.backbone must be desk_cnn or external:<tag>");
  require(!model.channels.empty(), "model.channels is empty");
  for (int ch : model.channels) require(ch > 0, "model.channels must be positive");
  require(model.head_hidden > 0, "model.head_hidden must be positive");
  require(model.reg_hidden > 0, "model.reg_hidden must be positive");

  const auto check_crop = [](int resize, int crop, const std::string& section) {
    require(crop >= 8, section + ".crop must be at least 8");
    require(crop <= resize, section + ".crop must not exceed resize_short");
  };
  check_crop(pretrain.resize_short, pretrain.crop, "pretrain");
  check_crop(finetune.resize_short, finetune.crop, "finetune");
  check_crop(eval.resize_short, eval.crop, "eval");

  require(pretrain.batch >= 2, "pretrain.batch must be at least 2");
  require(pretrain.epochs >= 1, "pretrain.epochs must be at least 1");
  require(pretrain.lr > 0, "pretrain.lr must be positive");
  require(pretrain.weight_decay >= 0, "pretrain.weight_decay must be non-negative");
  require(pretrain.margin > 0, "pretrain.margin must be positive");
  require(pretrain.lr_decay > 0 && pretrain.lr_decay <= 1, "pretrain.lr_decay must lie in (0,1]");
  require(pretrain.checkpoint_every >= 0, "pretrain.checkpoint_every must be non-negative");
  for (std::size_t i = 0; i < pretrain.lr_milestones.size(); ++i) {
    const int ms = pretrain.lr_milestones[i];
    require(ms >= 0 && ms < pretrain.epochs, "pretrain.lr_milestones must be < epochs");
    if (i > 0) require(ms > pretrain.lr_milestones[i - 1], "pretrain.lr_milestones must be strictly increasing");
  }

  require(finetune.batch >= 1, "finetune.batch must be at least 1");
  require(finetune.epochs >= 1, "finetune.epochs must be at least 1");
  require(finetune.lr > 0, "finetune.lr must be positive");
  for (const auto& [name, lr] : finetune.lr_by_dataset) {
    require(lr > 0, "finetune.lr_by_dataset." + name + " must be positive");
  }
  require(finetune.weight_decay >= 0, "finetune.weight_decay must be non-negative");

  require(scoring.temperature > 0, "scoring.temperature must be positive");
  require(selection.mode == "joint" || selection.mode == "distortion" || selection.mode == "perception",
          "selection.mode must be joint, distortion or perception");
  require(selection.corpus_size >= 1, "selection.corpus_size must be at least 1");
  require(selection.perception_cap >= 2, "selection.perception_cap must be at least 2");
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

double RunConfig::finetune_lr_for(std::string_view dataset_name) const {
  const auto it = finetune.lr_by_dataset.find(lower(std::string(dataset_name)));
  return it == finetune.lr_by_dataset.end() ? finetune.lr : it->second;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config parse error: " + std::string(e.what()));
  }
  RunConfig base = RunConfig::full();
  if (j.is_object() && j.contains("preset")) {
    const auto preset = j["preset"].is_string() ? j["preset"].get<std::string>() : std::string();
    if (preset == "desk") {
      base = RunConfig::desk();
    } else if (preset != "full") {
      throw ValidationError("unknown config preset \"" + preset + "\"");
    }
  }
  return RunConfig::from_json(j, base);
}

}  // namespace attiqa
