#include "attiqa/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"

namespace attiqa {

using nlohmann::json;

namespace {

constexpr std::string_view kDeskBackbone = "desk_cnn";
constexpr std::string_view kExternalPrefix = "external:";

int conv_out(int n) { return (n - 1) / 2 + 1; }

void he_normal(std::span<double> w, int fan_in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  for (double& v : w) v = normal(rng);
}

}  // namespace

void ModelSpec::validate() const {
  if (backbone != kDeskBackbone) {
    if (backbone.rfind(kExternalPrefix, 0) != 0 || backbone.size() == kExternalPrefix.size()) {
      throw ValidationError("unknown backbone \"" + backbone + "\" (expected desk_cnn or external:<tag>)");
    }
  }
  if (channels.empty()) throw ValidationError("backbone needs at least one stage");
  for (int c : channels) {
    if (c <= 0) throw ValidationError("backbone channel counts must be positive");
  }
  if (in_channels != 3) throw ValidationError("model input must have 3 channels");
  if (head_hidden <= 0) throw ValidationError("head_hidden must be positive");
  if (reg_hidden && *reg_hidden <= 0) throw ValidationError("reg_hidden must be positive");
}

json ModelSpec::to_json() const {
  json j{{"backbone", backbone}, {"channels", channels}, {"in_channels", in_channels}, {"head_hidden", head_hidden}};
  j["reg_hidden"] = reg_hidden ? json(*reg_hidden) : json(nullptr);
  return j;
}

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec s;
  try {
    s.backbone = j.at("backbone").get<std::string>();
    s.channels = j.at("channels").get<std::vector<int>>();
    s.in_channels = j.at("in_channels").get<int>();
    s.head_hidden = j.at("head_hidden").get<int>();
    if (j.contains("reg_hidden") && !j.at("reg_hidden").is_null()) s.reg_hidden = j.at("reg_hidden").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model spec: ") + e.what());
  }
  s.validate();
  return s;
}

ModelSpec ModelSpec::from_config(const ModelConfig& c) {
  ModelSpec s;
  s.backbone = c.backbone;
  s.channels = c.channels;
  s.head_hidden = c.head_hidden;
  s.validate();
  return s;
}

Tensor to_tensor(const ImageRaster& img) {
  Tensor t(3, static_cast<int>(img.height()), static_cast<int>(img.width()));
  const auto px = img.pixels();
  const std::size_t plane = img.pixel_count();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) t.data[c * plane + i] = px[3 * i + c] - 0.5;
  }
  return t;
}

void AttributeModel::layout() {
  std::size_t off = 0;
  const auto take = [&](std::size_t n) {
    ParamRange r{off, n};
    off += n;
    return r;
  };
  convs_.clear();
  int in = spec_.in_channels;
  for (int out : spec_.channels) {
    Conv c;
    c.in = in;
    c.out = out;
    c.w = take(std::size_t(out) * in * 9);
    c.b = take(out);
    convs_.push_back(c);
    in = out;
  }
  backbone_ = {0, off};
  const int db = spec_.backbone_dim();
  const int hh = spec_.head_hidden;
  for (Attribute a : kAttributes) {
    const std::size_t start = off;
    head_in_[a] = {db, hh, take(std::size_t(hh) * db), take(hh)};
    head_out_[a] = {hh, 1, take(hh), take(1)};
    heads_[a] = {start, off - start};
  }
  if (spec_.reg_hidden) {
    const std::size_t start = off;
    const int rh = *spec_.reg_hidden;
    reg_in_ = {spec_.feature_dim(), rh, take(std::size_t(rh) * spec_.feature_dim()), take(rh)};
    reg_out_ = {rh, 1, take(rh), take(1)};
    regressor_ = {start, off - start};
  } else {
    regressor_ = {off, 0};
  }
  params_.resize(off, 0.0);
}

AttributeModel AttributeModel::init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.backbone != kDeskBackbone) {
    throw ValidationError("backbone \"" + spec.backbone + "\" is not available in this build; only desk_cnn is built in");
  }
  AttributeModel m;
  m.spec_ = spec;
  m.layout();
  std::uint64_t salt = 0;
  const auto fill = [&](ParamRange w, int fan_in) {
    he_normal(m.parameters().subspan(w.offset, w.size), fan_in, mix_seed(seed, salt++));
  };
  for (const Conv& c : m.convs_) fill(c.w, c.in * 9);
  for (Attribute a : kAttributes) {
    fill(m.head_in_[a].w, m.head_in_[a].in);
    fill(m.head_out_[a].w, m.head_out_[a].in);
  }
  if (spec.reg_hidden) {
    const int rh = *spec.reg_hidden;
    m.spec_.reg_hidden.reset();
    m.attach_regressor(rh, mix_seed(seed, 0x7265'6772ULL));
  }
  return m;
}

AttributeModel AttributeModel::from_parameters(const ModelSpec& spec, std::vector<double> params) {
  spec.validate();
  AttributeModel m;
  m.spec_ = spec;
  m.layout();
  if (params.size() != m.params_.size()) {
    throw ValidationError("parameter count " + std::to_string(params.size()) + " does not match spec (" +
                          std::to_string(m.params_.size()) + ")");
  }
  m.params_ = std::move(params);
  return m;
}

void AttributeModel::attach_regressor(int reg_hidden, std::uint64_t seed) {
  if (reg_hidden <= 0) throw ValidationError("reg_hidden must be positive");
  std::vector<double> keep(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(heads_range().end()));
  spec_.reg_hidden = reg_hidden;
  layout();
  std::copy(keep.begin(), keep.end(), params_.begin());
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(regressor_.offset), params_.end(), 0.0);
  he_normal(parameters().subspan(reg_in_.w.offset, reg_in_.w.size), reg_in_.in, mix_seed(seed, 0));
  he_normal(parameters().subspan(reg_out_.w.offset, reg_out_.w.size), reg_out_.in, mix_seed(seed, 1));
}

ParamRange AttributeModel::heads_range() const {
  return {heads_[Attribute::sharpness].offset, heads_[Attribute::noisiness].end() - heads_[Attribute::sharpness].offset};
}

ParamRange AttributeModel::regressor_range() const {
  if (!has_regressor()) throw ValidationError("no regressor");
  return regressor_;
}

ParamRange AttributeModel::head_output_layer(Attribute a) const {
  return {head_out_[a].w.offset, head_out_[a].b.end() - head_out_[a].w.offset};
}

namespace {

// 3x3, stride 2, padding 1.
void conv_forward(const Tensor& in, const double* w, const double* b, Tensor& out) {
  const int oh = out.height;
  const int ow = out.width;
  for (int oc = 0; oc < out.channels; ++oc) {
    double* o = &out.data[std::size_t(oc) * oh * ow];
    std::fill(o, o + std::size_t(oh) * ow, b[oc]);
    for (int ic = 0; ic < in.channels; ++ic) {
      const double* src = &in.data[std::size_t(ic) * in.height * in.width];
      const double* k = w + (std::size_t(oc) * in.channels + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = 2 * oy + ky - 1;
          if (iy < 0 || iy >= in.height) continue;
          const double* row = src + std::size_t(iy) * in.width;
          double* orow = o + std::size_t(oy) * ow;
          for (int kx = 0; kx < 3; ++kx) {
            const double kv = k[ky * 3 + kx];
            const int ox_lo = kx == 0 ? 1 : 0;
            const int ox_hi = std::min(ow, (in.width - kx) / 2 + 1);
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += kv * row[2 * ox + kx - 1];
          }
        }
      }
    }
  }
}

// d_pre: gradient w.r.t. the pre-activation output. Accumulates dW, dB and
// (when d_in is non-null) the input gradient.
void conv_backward(const Tensor& in, const double* w, const Tensor& d_pre, double* dw, double* db, Tensor* d_in) {
  const int oh = d_pre.height;
  const int ow = d_pre.width;
  for (int oc = 0; oc < d_pre.channels; ++oc) {
    const double* g = &d_pre.data[std::size_t(oc) * oh * ow];
    double bsum = 0.0;
    for (int i = 0; i < oh * ow; ++i) bsum += g[i];
    db[oc] += bsum;
    for (int ic = 0; ic < in.channels; ++ic) {
      const double* src = &in.data[std::size_t(ic) * in.height * in.width];
      double* dsrc = d_in ? &d_in->data[std::size_t(ic) * in.height * in.width] : nullptr;
      const std::size_t kidx = (std::size_t(oc) * in.channels + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = w[kidx + ky * 3 + kx];
          const int ox_lo = kx == 0 ? 1 : 0;
          const int ox_hi = std::min(ow, (in.width - kx) / 2 + 1);
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= in.height) continue;
            const double* row = src + std::size_t(iy) * in.width;
            const double* grow = g + std::size_t(oy) * ow;
            for (int ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * row[2 * ox + kx - 1];
            if (dsrc) {
              double* drow = dsrc + std::size_t(iy) * in.width;
              for (int ox = ox_lo; ox < ox_hi; ++ox) drow[2 * ox + kx - 1] += kv * grow[ox];
            }
          }
          dw[kidx + ky * 3 + kx] += acc;
        }
      }
    }
  }
}

// out = W x + b with W stored row-major (out x in).
void dense_forward(const double* w, const double* b, const double* x, int in, int out, double* y) {
  for (int o = 0; o < out; ++o) {
    const double* row = w + std::size_t(o) * in;
    double s = b[o];
    for (int i = 0; i < in; ++i) s += row[i] * x[i];
    y[o] = s;
  }
}

void dense_backward(const double* w, const double* x, const double* dy, int in, int out, double* dw, double* db,
                    double* dx) {
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    db[o] += g;
    double* drow = dw + std::size_t(o) * in;
    for (int i = 0; i < in; ++i) drow[i] += g * x[i];
    if (dx) {
      const double* row = w + std::size_t(o) * in;
      for (int i = 0; i < in; ++i) dx[i] += g * row[i];
    }
  }
}

}  // namespace

AttributeModel::Output AttributeModel::forward(const Tensor& input, bool with_mos, Trace* trace) const {
  if (params_.empty()) throw ValidationError("model is not initialized");
  if (input.channels != spec_.in_channels || input.height < 1 || input.width < 1) {
    throw ValidationError("input tensor does not match the backbone's 3-channel contract");
  }
  if (with_mos && !has_regressor()) throw ValidationError("no regressor");
  const double* p = params_.data();

  Tensor x = input;
  if (trace) {
    trace->conv_inputs.clear();
    trace->conv_preact.clear();
  }
  for (const Conv& c : convs_) {
    Tensor y(c.out, conv_out(x.height), conv_out(x.width));
    conv_forward(x, p + c.w.offset, p + c.b.offset, y);
    if (trace) {
      trace->conv_inputs.push_back(std::move(x));
      trace->conv_preact.push_back(y);
    }
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    x = std::move(y);
  }
  const int db = spec_.backbone_dim();
  const std::size_t plane = std::size_t(x.height) * x.width;
  std::vector<double> pooled(db, 0.0);
  for (int c = 0; c < db; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += x.data[c * plane + i];
    pooled[c] = s / static_cast<double>(plane);
  }

  Output out;
  const int hh = spec_.head_hidden;
  for (Attribute a : kAttributes) {
    std::vector<double> pre(hh);
    dense_forward(p + head_in_[a].w.offset, p + head_in_[a].b.offset, pooled.data(), db, hh, pre.data());
    std::vector<double> hid(hh);
    for (int i = 0; i < hh; ++i) hid[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    double e = 0.0;
    dense_forward(p + head_out_[a].w.offset, p + head_out_[a].b.offset, hid.data(), hh, 1, &e);
    out.attributes[a] = e;
    if (trace) trace->head_preact[a] = std::move(pre);
    out.features[a] = std::move(hid);
  }

  if (with_mos) {
    std::vector<double> cat;
    cat.reserve(spec_.feature_dim());
    for (Attribute a : kAttributes) cat.insert(cat.end(), out.features[a].begin(), out.features[a].end());
    const int rh = *spec_.reg_hidden;
    std::vector<double> pre(rh);
    dense_forward(p + reg_in_.w.offset, p + reg_in_.b.offset, cat.data(), spec_.feature_dim(), rh, pre.data());
    std::vector<double> hid(rh);
    for (int i = 0; i < rh; ++i) hid[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    double m = 0.0;
    dense_forward(p + reg_out_.w.offset, p + reg_out_.b.offset, hid.data(), rh, 1, &m);
    out.mos = m;
    if (trace) {
      trace->reg_input = std::move(cat);
      trace->reg_preact = std::move(pre);
    }
  }
  if (trace) {
    trace->pooled = std::move(pooled);
    trace->head_hidden = out.features;
  }
  return out;
}

void AttributeModel::backward(const Trace& trace, const PerAttribute<double>& d_attributes, double d_mos,
                              std::span<double> grad, Trainable trainable) const {
  if (grad.size() != params_.size()) throw ValidationError("gradient buffer size mismatch");
  const double* p = params_.data();
  double* g = grad.data();
  const int db = spec_.backbone_dim();
  const int hh = spec_.head_hidden;

  // Gradient w.r.t. each head's post-ReLU hidden layer.
  PerAttribute<std::vector<double>> d_hidden;
  for (Attribute a : kAttributes) d_hidden[a].assign(hh, 0.0);

  if (d_mos != 0.0) {
    if (!has_regressor() || trace.reg_input.empty()) throw ValidationError("no regressor");
    const int rh = *spec_.reg_hidden;
    std::vector<double> hid(rh);
    for (int i = 0; i < rh; ++i) hid[i] = trace.reg_preact[i] > 0.0 ? trace.reg_preact[i] : 0.0;
    std::vector<double> d_hid(rh, 0.0);
    dense_backward(p + reg_out_.w.offset, hid.data(), &d_mos, rh, 1, g + reg_out_.w.offset, g + reg_out_.b.offset,
                   d_hid.data());
    for (int i = 0; i < rh; ++i) {
      if (trace.reg_preact[i] <= 0.0) d_hid[i] = 0.0;
    }
    std::vector<double> d_cat(trainable == Trainable::regressor_only ? 0 : spec_.feature_dim(), 0.0);
    dense_backward(p + reg_in_.w.offset, trace.reg_input.data(), d_hid.data(), spec_.feature_dim(), rh,
                   g + reg_in_.w.offset, g + reg_in_.b.offset, d_cat.empty() ? nullptr : d_cat.data());
    if (!d_cat.empty()) {
      for (Attribute a : kAttributes) {
        const std::size_t base = index_of(a) * std::size_t(hh);
        for (int i = 0; i < hh; ++i) d_hidden[a][i] += d_cat[base + i];
      }
    }
  }
  if (trainable == Trainable::regressor_only) return;

  const bool need_backbone = trainable == Trainable::all;
  std::vector<double> d_pooled(need_backbone ? db : 0, 0.0);
  for (Attribute a : kAttributes) {
    const double de = d_attributes[a];
    if (de != 0.0) {
      dense_backward(p + head_out_[a].w.offset, trace.head_hidden[a].data(), &de, hh, 1, g + head_out_[a].w.offset,
                     g + head_out_[a].b.offset, d_hidden[a].data());
    }
    std::vector<double>& dh = d_hidden[a];
    bool any = false;
    for (int i = 0; i < hh; ++i) {
      if (trace.head_preact[a][i] <= 0.0) dh[i] = 0.0;
      any = any || dh[i] != 0.0;
    }
    if (!any) continue;
    dense_backward(p + head_in_[a].w.offset, trace.pooled.data(), dh.data(), db, hh, g + head_in_[a].w.offset,
                   g + head_in_[a].b.offset, need_backbone ? d_pooled.data() : nullptr);
  }
  if (!need_backbone) return;

  // Global average pool, then the conv stack in reverse.
  const Tensor& last = trace.conv_preact.back();
  Tensor d(last.channels, last.height, last.width);
  const std::size_t plane = std::size_t(last.height) * last.width;
  for (int c = 0; c < db; ++c) {
    const double v = d_pooled[c] / static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) d.data[c * plane + i] = v;
  }
  for (std::size_t li = convs_.size(); li-- > 0;) {
    const Conv& c = convs_[li];
    const Tensor& pre = trace.conv_preact[li];
    for (std::size_t i = 0; i < d.data.size(); ++i) {
      if (pre.data[i] <= 0.0) d.data[i] = 0.0;
    }
    const Tensor& in = trace.conv_inputs[li];
    Tensor d_in;
    if (li > 0) d_in = Tensor(in.channels, in.height, in.width);
    conv_backward(in, p + c.w.offset, d, g + c.w.offset, g + c.b.offset, li > 0 ? &d_in : nullptr);
    d = std::move(d_in);
  }
}

PerAttribute<double> AttributeModel::forward_attributes(const ImageRaster& img) const {
  return forward(to_tensor(img), false).attributes;
}

PerAttribute<std::vector<double>> AttributeModel::head_features(const ImageRaster& img) const {
  return forward(to_tensor(img), false).features;
}

std::vector<double> AttributeModel::concat_head_features(const ImageRaster& img) const {
  const auto f = head_features(img);
  std::vector<double> cat;
  cat.reserve(spec_.feature_dim());
  for (Attribute a : kAttributes) cat.insert(cat.end(), f[a].begin(), f[a].end());
  return cat;
}

double AttributeModel::forward_mos(const ImageRaster& img) const {
  if (!has_regressor()) throw ValidationError("no regressor");
  return *forward(to_tensor(img), true).mos;
}

double AttributeModel::regress(std::span<const double> features) const {
  if (!has_regressor()) throw ValidationError("no regressor");
  if (features.size() != static_cast<std::size_t>(spec_.feature_dim())) {
    throw ValidationError("feature vector length does not match 5 * head_hidden");
  }
  const double* p = params_.data();
  const int rh = *spec_.reg_hidden;
  std::vector<double> hid(rh);
  dense_forward(p + reg_in_.w.offset, p + reg_in_.b.offset, features.data(), spec_.feature_dim(), rh, hid.data());
  for (double& v : hid) v = v > 0.0 ? v : 0.0;
  double m = 0.0;
  dense_forward(p + reg_out_.w.offset, p + reg_out_.b.offset, hid.data(), rh, 1, &m);
  return m;
}

std::string AttributeModel::checksum(ParamRange range) const {
  if (range.end() > params_.size()) throw ValidationError("parameter range out of bounds");
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data() + range.offset);
  return sha256_hex(std::span<const unsigned char>(bytes, range.size * sizeof(double)));
}

std::string AttributeModel::checksum() const { return checksum({0, params_.size()}); }

}  // namespace attiqa
