#include "attiqa/evaluation.hpp"

#include <cmath>
#include <fstream>

#include "attiqa/error.hpp"
#include "attiqa/metrics.hpp"
#include "attiqa/parallel.hpp"

namespace attiqa::evaluation {

using nlohmann::json;

namespace {

// Mean taken as offsets from the first value, so five equal values average
// to exactly that value.
double crop_mean(const std::array<double, 5>& v) {
  double dev = 0.0;
  for (double x : v) dev += x - v[0];
  return v[0] + dev / 5.0;
}

}  // namespace

std::array<CropOffset, 5> five_crop_offsets(std::size_t height, std::size_t width, std::size_t crop) {
  if (crop == 0 || crop > height || crop > width) {
    throw ValidationError("crop " + std::to_string(crop) + " does not fit a " + std::to_string(height) + "x" +
                          std::to_string(width) + " image");
  }
  const std::size_t dy = height - crop;
  const std::size_t dx = width - crop;
  return {CropOffset{0, 0}, CropOffset{0, dx}, CropOffset{dy, 0}, CropOffset{dy, dx}, CropOffset{dy / 2, dx / 2}};
}

EvalOptions EvalOptions::from_config(const EvalConfig& c) {
  EvalOptions o;
  o.five_crop = c.five_crop;
  o.resize_short = static_cast<std::size_t>(c.resize_short);
  o.crop = static_cast<std::size_t>(c.crop);
  return o;
}

double five_crop_predict(const AttributeModel& model, const ImageRaster& img, std::size_t resize_short,
                         std::size_t crop_side) {
  const ImageRaster r = resize_short_edge(img, resize_short);
  const auto offsets = five_crop_offsets(r.height(), r.width(), crop_side);
  std::array<double, 5> v{};
  for (std::size_t k = 0; k < 5; ++k) {
    v[k] = model.forward_mos(crop(r, offsets[k].y, offsets[k].x, crop_side, crop_side));
  }
  return crop_mean(v);
}

double predict_mos(const AttributeModel& model, const ImageRaster& img, const EvalOptions& options) {
  if (options.five_crop) return five_crop_predict(model, img, options.resize_short, options.crop);
  const ImageRaster r = resize_short_edge(img, options.resize_short);
  if (r.height() < options.crop || r.width() < options.crop) {
    throw ValidationError("image " + img.id() + " is smaller than the crop after resizing");
  }
  return model.forward_mos(center_crop(r, options.crop));
}

PerAttribute<double> predict_attributes(const AttributeModel& model, const ImageRaster& img,
                                        const EvalOptions& options) {
  const ImageRaster r = resize_short_edge(img, options.resize_short);
  if (!options.five_crop) return model.forward_attributes(center_crop(r, options.crop));
  const auto offsets = five_crop_offsets(r.height(), r.width(), options.crop);
  PerAttribute<std::array<double, 5>> per{};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto e = model.forward_attributes(crop(r, offsets[k].y, offsets[k].x, options.crop, options.crop));
    for (Attribute a : kAttributes) per[a][k] = e[a];
  }
  PerAttribute<double> mean{};
  for (Attribute a : kAttributes) mean[a] = crop_mean(per[a]);
  return mean;
}

json EvalReport::to_json() const {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"dataset", dataset}, {"n", n}, {"srocc", opt(srocc)}};
  if (include_plcc) j["plcc"] = opt(plcc);
  j["protocol"] = {{"splits", protocol.splits},
                   {"seeds", protocol.seeds},
                   {"five_crop", protocol.five_crop},
                   {"crop", protocol.crop},
                   {"resize_short", protocol.resize_short}};
  if (!split_srocc.empty()) {
    j["per_split"] = {{"srocc", split_srocc}};
    if (include_plcc) j["per_split"]["plcc"] = split_plcc;
  }
  if (!trained_on.empty()) j["trained_on"] = trained_on;
  j["error"] = error ? json(*error) : json(nullptr);
  j["warnings"] = warnings;
  return j;
}

EvalReport evaluate_predictions(std::string dataset, std::span<const double> predictions,
                                std::span<const double> mos, const Protocol& protocol) {
  EvalReport r;
  r.dataset = std::move(dataset);
  r.n = predictions.size();
  r.protocol = protocol;
  try {
    r.srocc = metrics::srocc(predictions, mos).value;
    r.plcc = metrics::plcc(predictions, mos).value;
  } catch (const DegenerateInputError& e) {
    r.srocc.reset();
    r.plcc.reset();
    r.error = std::string("degenerate input: ") + e.what();
  }
  return r;
}

namespace {

Protocol single_protocol(const EvalOptions& options) {
  Protocol p;
  p.splits = 1;
  p.five_crop = options.five_crop;
  p.crop = options.crop;
  p.resize_short = options.resize_short;
  return p;
}

std::vector<double> mos_of(const DatasetManifest& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& r : m.records) {
    if (!r.mos) throw ValidationError("record \"" + r.image_id + "\" has no MOS");
    out.push_back(*r.mos);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const AttributeModel& model, const DatasetManifest& manifest, const EvalOptions& options,
                    const std::vector<ImageRaster>* images) {
  if (!model.has_regressor()) throw ValidationError("no regressor");
  if (manifest.size() < 2) throw ValidationError("evaluation needs at least two records");
  if (images && images->size() != manifest.size()) throw ValidationError("image count does not match the manifest");
  const std::vector<double> mos = mos_of(manifest);
  std::vector<double> pred(manifest.size());
  parallel_for(manifest.size(), options.jobs, [&](std::size_t i) {
    pred[i] = images ? predict_mos(model, (*images)[i], options)
                     : predict_mos(model, load_record_image(manifest, manifest.records[i]), options);
  });
  return evaluate_predictions(manifest.name, pred, mos, single_protocol(options));
}

EvalReport run_protocol(const DatasetManifest& manifest, const EvalOptions& options, const TrainFn& train_fn,
                        std::uint64_t base_seed, double train_fraction, SplitTagPolicy policy) {
  mos_of(manifest);
  std::vector<std::uint64_t> seeds =
      policy == SplitTagPolicy::use_official ? std::vector<std::uint64_t>{base_seed} : ten_split_seeds(base_seed);
  EvalReport report;
  report.dataset = manifest.name;
  report.protocol = single_protocol(options);
  report.protocol.splits = seeds.size();
  report.protocol.seeds = seeds;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const DatasetSplit split = split_dataset(manifest, train_fraction, seeds[k], policy);
    const AttributeModel model = train_fn(split.train, seeds[k]);
    const EvalReport r = evaluate(model, split.test, options);
    if (r.error) {
      report.error = "split " + std::to_string(k) + ": " + *r.error;
      return report;
    }
    report.n = r.n;
    report.split_srocc.push_back(*r.srocc);
    report.split_plcc.push_back(*r.plcc);
  }
  report.srocc = metrics::median(report.split_srocc);
  report.plcc = metrics::median(report.split_plcc);
  return report;
}

EvalReport cross_dataset(const AttributeModel& model, const std::string& train_name,
                         const DatasetManifest& test_manifest, const EvalOptions& options) {
  EvalReport r = evaluate(model, test_manifest, options);
  r.include_plcc = false;
  r.plcc.reset();
  r.trained_on = train_name;
  if (!train_name.empty() && train_name == test_manifest.name) {
    r.warnings.push_back("test dataset \"" + test_manifest.name +
                         "\" has the same name as the training dataset; this is not a cross-dataset result");
  }
  return r;
}

PairwiseBenchmark load_pairwise_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pairwise benchmark " + path.string());
  PairwiseBenchmark b;
  b.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    PairwiseEntry e;
    try {
      const json j = json::parse(line);
      for (const auto& [key, _] : j.items()) {
        if (key != "a" && key != "b" && key != "pref") throw ValidationError(where + ": unknown key " + key);
      }
      e.a = j.at("a").get<std::string>();
      e.b = j.at("b").get<std::string>();
      const std::string pref = j.at("pref").get<std::string>();
      if (pref == "A") {
        e.human = Preference::A;
      } else if (pref == "B") {
        e.human = Preference::B;
      } else {
        throw ValidationError(where + ": pref must be \"A\" or \"B\"");
      }
    } catch (const json::exception& ex) {
      throw ValidationError(where + ": " + ex.what());
    }
    if (e.a == e.b) throw ValidationError(where + ": a pair must hold two distinct images");
    b.pairs.push_back(std::move(e));
  }
  if (b.pairs.empty()) throw ValidationError("pairwise benchmark " + path.string() + " is empty");
  return b;
}

json PairwiseResult::to_json() const {
  return json{{"agreement", agreement}, {"n", n}, {"agreed", agreed}, {"ties", ties}};
}

PairwiseResult compare_predictions(std::span<const double> score_a, std::span<const double> score_b,
                                   std::span<const Preference> human) {
  if (score_a.size() != score_b.size() || score_a.size() != human.size()) {
    throw ValidationError("pairwise inputs differ in length");
  }
  if (human.empty()) throw ValidationError("pairwise comparison needs at least one pair");
  PairwiseResult r;
  r.n = human.size();
  for (std::size_t i = 0; i < r.n; ++i) {
    if (score_a[i] == score_b[i]) {
      ++r.ties;
      continue;
    }
    const Preference model = score_a[i] > score_b[i] ? Preference::A : Preference::B;
    if (model == human[i]) ++r.agreed;
  }
  r.agreement = static_cast<double>(r.agreed) / static_cast<double>(r.n);
  return r;
}

PairwiseResult compare_pairs(const AttributeModel& model, const PairwiseBenchmark& benchmark,
                             const EvalOptions& options) {
  if (!model.has_regressor()) throw ValidationError("no regressor");
  const std::size_t n = benchmark.pairs.size();
  std::vector<double> sa(n);
  std::vector<double> sb(n);
  std::vector<Preference> human(n);
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : benchmark.base_dir / path;
  };
  parallel_for(n, options.jobs, [&](std::size_t i) {
    const PairwiseEntry& e = benchmark.pairs[i];
    sa[i] = predict_mos(model, load_png(resolve(e.a), e.a), options);
    sb[i] = predict_mos(model, load_png(resolve(e.b), e.b), options);
    human[i] = e.human;
  });
  return compare_predictions(sa, sb, human);
}

}  // namespace attiqa::evaluation
