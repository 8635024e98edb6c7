#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/parallel.hpp"
#include "attiqa/training.hpp"

namespace attiqa::training {

namespace {

// Gradients are accumulated in a fixed number of lanes and summed in lane
// order, so results do not depend on the thread count.
constexpr std::size_t kLanes = 4;

std::vector<ImageRaster> prepared_images(const DatasetManifest& manifest, const TrainOptions& options,
                                         std::size_t resize_short) {
  std::vector<ImageRaster> out(manifest.size());
  if (!options.images.empty() && options.images.size() != manifest.size()) {
    throw ValidationError("preloaded image count does not match the manifest");
  }
  parallel_for(manifest.size(), options.jobs, [&](std::size_t i) {
    const ImageRaster img =
        options.images.empty() ? load_record_image(manifest, manifest.records[i]) : options.images[i];
    out[i] = resize_short_edge(img, resize_short);
  });
  return out;
}

std::string epoch_dir(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch-%03d", epoch);
  return buf;
}

struct Lane {
  std::vector<double> grad;
  double loss = 0.0;
};

// Runs fn(lane, i) for every batch position, position i going to lane i % kLanes.
template <class Fn>
void over_lanes(std::size_t batch, std::size_t jobs, Fn&& fn) {
  parallel_for(kLanes, jobs, [&](std::size_t lane) {
    for (std::size_t i = lane; i < batch; i += kLanes) fn(lane, i);
  });
}

void reduce_lanes(std::vector<Lane>& lanes, std::vector<double>& grad, double& loss) {
  std::fill(grad.begin(), grad.end(), 0.0);
  loss = 0.0;
  for (Lane& l : lanes) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += l.grad[k];
    loss += l.loss;
  }
}

void log_epoch(const TrainOptions& options, const char* stage, int epoch, int epochs, double loss, double lr) {
  if (!options.log) return;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s epoch %d/%d loss %.6f lr %.3g\n", stage, epoch + 1, epochs, loss, lr);
  *options.log << buf << std::flush;
}

}  // namespace

TrainResult pretrain(const DatasetManifest& manifest, const LabelStore& labels, const RunConfig& config,
                     const std::filesystem::path& out_dir, const TrainOptions& options) {
  config.validate();
  const PretrainConfig& cfg = config.pretrain;
  if (manifest.size() < 2) throw ValidationError("pretraining needs at least two images");
  std::vector<PerAttribute<double>> target(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto* rec = labels.find(manifest.records[i].image_id);
    if (!rec) throw ValidationError("missing pseudo-label for image \"" + manifest.records[i].image_id + "\"");
    target[i] = rec->scores;
  }

  const auto images = prepared_images(manifest, options, static_cast<std::size_t>(cfg.resize_short));
  TrainResult result;
  result.model = AttributeModel::init(ModelSpec::from_config(config.model), config.seed);
  AttributeModel& model = result.model;
  const std::size_t n_params = model.parameter_count();
  AdamW opt(n_params);
  const std::vector<ParamRange> ranges{model.backbone_range(), model.heads_range()};

  result.manifest.stage = "pretrain";
  result.manifest.config_hash = config.hash();
  result.manifest.provider_id = options.provider_id;
  result.manifest.prompt_set_id = options.prompt_set_id;
  if (result.manifest.provider_id.empty() && !labels.records().empty()) {
    result.manifest.provider_id = labels.records().front().provider_id;
    result.manifest.prompt_set_id = labels.records().front().prompt_set_id;
  }
  result.manifest.dataset = manifest.name;
  result.manifest.seed = config.seed;
  result.manifest.config = config.to_json();

  std::vector<Lane> lanes(kLanes);
  for (Lane& l : lanes) l.grad.assign(n_params, 0.0);
  std::vector<double> grad(n_params, 0.0);
  std::vector<std::size_t> order(manifest.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(cfg.batch);
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = milestone_lr(cfg.lr, cfg.lr_milestones, cfg.lr_decay, epoch);
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x5348'0000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sum = 0.0;
    std::size_t epoch_steps = 0;

    for (std::size_t lo = 0; lo + 1 < order.size(); lo += batch_size) {
      const std::size_t b = std::min(batch_size, order.size() - lo);
      if (b < 2) break;
      const std::uint64_t step_seed = mix_seed(config.seed, 0xba7c'0000'0000ULL + step);

      std::vector<AttributeModel::Trace> traces(b);
      std::vector<PerAttribute<double>> preds(b);
      over_lanes(b, options.jobs, [&](std::size_t, std::size_t i) {
        std::mt19937_64 crop_rng(mix_seed(step_seed, i));
        const ImageRaster x = random_crop(images[order[lo + i]], static_cast<std::size_t>(cfg.crop), crop_rng);
        preds[i] = model.forward(to_tensor(x), false, &traces[i]).attributes;
      });

      std::vector<PerAttribute<double>> d_pred(b);
      for (auto& d : d_pred) d = PerAttribute<double>{};
      double loss = 0.0;
      if (cfg.loss == PretrainLoss::ranking) {
        const auto pairs = sample_pairs(b, step_seed, cfg.pair_sampler);
        const double scale = 1.0 / static_cast<double>(pairs.size());
        for (const IndexPair& p : pairs) {
          const PairLoss pl = pair_ranking_loss_grad(preds[p.first], preds[p.second], target[order[lo + p.first]],
                                                     target[order[lo + p.second]], cfg.margin, cfg.orientation);
          loss += pl.value * scale;
          for (Attribute a : kAttributes) {
            d_pred[p.first][a] += pl.d_pred1[a] * scale;
            d_pred[p.second][a] += pl.d_pred2[a] * scale;
          }
        }
      } else {
        const double scale = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i) {
          const PointLoss pl = l2_pretrain_loss_grad(preds[i], target[order[lo + i]]);
          loss += pl.value * scale;
          for (Attribute a : kAttributes) d_pred[i][a] = pl.d_pred[a] * scale;
        }
      }
      if (!std::isfinite(loss)) {
        throw Error("non-finite pretraining loss at epoch " + std::to_string(epoch + 1) + ", step " +
                    std::to_string(step));
      }

      for (Lane& l : lanes) std::fill(l.grad.begin(), l.grad.end(), 0.0);
      over_lanes(b, options.jobs, [&](std::size_t lane, std::size_t i) {
        model.backward(traces[i], d_pred[i], 0.0, lanes[lane].grad, Trainable::all);
      });
      double unused = 0.0;
      reduce_lanes(lanes, grad, unused);
      opt.step(model.parameters(), grad, lr, cfg.weight_decay, ranges);

      result.history.push_back({step, epoch + 1, loss, lr});
      epoch_sum += loss;
      ++epoch_steps;
      ++step;
    }
    const double mean = epoch_steps ? epoch_sum / static_cast<double>(epoch_steps) : 0.0;
    result.epoch_loss.push_back(mean);
    log_epoch(options, "pretrain", epoch, cfg.epochs, mean, lr);

    if (!out_dir.empty() && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        epoch + 1 < cfg.epochs) {
      CheckpointManifest m = result.manifest;
      m.epoch = epoch + 1;
      m.metrics = {{"epoch_loss", mean}};
      save_checkpoint(model, m, out_dir / epoch_dir(epoch + 1));
    }
  }

  result.manifest.epoch = cfg.epochs;
  result.manifest.metrics = {{"final_epoch_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()},
                             {"steps", step}};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(model, result.manifest, out_dir / "final");
    write_loss_history(result.history, out_dir / "loss_history.csv");
  }
  return result;
}

TrainResult finetune(const Checkpoint& start, const DatasetManifest& manifest, const RunConfig& config,
                     const std::filesystem::path& out_dir, const TrainOptions& options) {
  config.validate();
  const FinetuneConfig& cfg = config.finetune;
  if (manifest.size() < 2) throw ValidationError("fine-tuning needs at least two images");
  for (const auto& r : manifest.records) {
    if (!r.mos) throw ValidationError("missing MOS for image \"" + r.image_id + "\"");
  }

  TrainResult result;
  result.model = start.model;
  AttributeModel& model = result.model;
  if (model.spec().channels != config.model.channels || model.spec().head_hidden != config.model.head_hidden) {
    if (options.log) *options.log << "note: using the checkpoint's architecture, not the config's model section\n";
  }
  if (!model.has_regressor()) model.attach_regressor(config.model.reg_hidden, mix_seed(config.seed, 0x7265'67ULL));

  Trainable trainable = Trainable::all;
  std::vector<ParamRange> ranges{model.backbone_range(), model.heads_range(), model.regressor_range()};
  if (cfg.linear_probe) {
    trainable = Trainable::regressor_only;
    ranges = {model.regressor_range()};
  } else if (cfg.freeze_backbone) {
    trainable = Trainable::heads_and_regressor;
    ranges = {model.heads_range(), model.regressor_range()};
  }

  const auto images = prepared_images(manifest, options, static_cast<std::size_t>(cfg.resize_short));
  const std::size_t n_params = model.parameter_count();
  AdamW opt(n_params);
  const double base_lr = config.finetune_lr_for(manifest.name);
  const auto batch_size = static_cast<std::size_t>(cfg.batch);
  const std::size_t steps_per_epoch = (manifest.size() + batch_size - 1) / batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);

  result.manifest = start.manifest;
  result.manifest.stage = "finetune";
  result.manifest.config_hash = config.hash();
  result.manifest.dataset = manifest.name;
  result.manifest.seed = config.seed;
  result.manifest.config = config.to_json();

  std::vector<Lane> lanes(kLanes);
  for (Lane& l : lanes) l.grad.assign(n_params, 0.0);
  std::vector<double> grad(n_params, 0.0);
  std::vector<std::size_t> order(manifest.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0xf700'0000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sum = 0.0;
    std::size_t epoch_steps = 0;
    double lr = base_lr;

    for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
      const std::size_t b = std::min(batch_size, order.size() - lo);
      lr = cosine_lr(base_lr, step, total_steps);
      const std::uint64_t step_seed = mix_seed(config.seed, 0xf17e'0000'0000ULL + step);
      for (Lane& l : lanes) {
        std::fill(l.grad.begin(), l.grad.end(), 0.0);
        l.loss = 0.0;
      }
      const double scale = 1.0 / static_cast<double>(b);
      over_lanes(b, options.jobs, [&](std::size_t lane, std::size_t i) {
        std::mt19937_64 crop_rng(mix_seed(step_seed, i));
        const std::size_t idx = order[lo + i];
        const ImageRaster x = random_crop(images[idx], static_cast<std::size_t>(cfg.crop), crop_rng);
        AttributeModel::Trace trace;
        const double pred = *model.forward(to_tensor(x), true, &trace).mos;
        const double err = pred - *manifest.records[idx].mos;
        double d = 0.0;
        if (cfg.loss == FinetuneLoss::squared_error) {
          lanes[lane].loss += err * err * scale;
          d = 2.0 * err * scale;
        } else {
          lanes[lane].loss += std::abs(err) * scale;
          d = (err > 0.0 ? 1.0 : err < 0.0 ? -1.0 : 0.0) * scale;
        }
        model.backward(trace, PerAttribute<double>{}, d, lanes[lane].grad, trainable);
      });
      double loss = 0.0;
      reduce_lanes(lanes, grad, loss);
      if (!std::isfinite(loss)) {
        throw Error("non-finite fine-tuning loss at epoch " + std::to_string(epoch + 1) + ", step " +
                    std::to_string(step));
      }
      opt.step(model.parameters(), grad, lr, cfg.weight_decay, ranges);
      result.history.push_back({step, epoch + 1, loss, lr});
      epoch_sum += loss;
      ++epoch_steps;
      ++step;
    }
    const double mean = epoch_sum / static_cast<double>(epoch_steps);
    result.epoch_loss.push_back(mean);
    log_epoch(options, "finetune", epoch, cfg.epochs, mean, lr);
  }

  result.manifest.epoch = cfg.epochs;
  result.manifest.metrics = {{"final_epoch_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()},
                             {"steps", step},
                             {"linear_probe", cfg.linear_probe},
                             {"freeze_backbone", cfg.freeze_backbone}};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(model, result.manifest, out_dir / "final");
    write_loss_history(result.history, out_dir / "loss_history.csv");
  }
  return result;
}

}  // namespace attiqa::training
