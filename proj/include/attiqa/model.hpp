#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attiqa/attribute.hpp"
#include "attiqa/config.hpp"
#include "attiqa/image.hpp"
#include "json.hpp"

namespace attiqa {

/// Architecture description. The desk backbone is a stack of 3x3 stride-2
/// convolutions with ReLU, followed by global average pooling, so the
/// backbone output dimension is channels.back().
struct ModelSpec {
  std::string backbone = "desk_cnn";
  std::vector<int> channels{16, 32, 48, 64};
  int in_channels = 3;
  int head_hidden = 512;
  std::optional<int> reg_hidden;  // regressor present when set

  int backbone_dim() const { return channels.empty() ? 0 : channels.back(); }
  int feature_dim() const { return static_cast<int>(kNumAttributes) * head_hidden; }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
  static ModelSpec from_config(const ModelConfig& c);
  bool operator==(const ModelSpec&) const = default;
};

/// Channel-major (C x H x W) activations.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(std::size_t(c) * h * w, 0.0) {}
  double& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }
};

/// Converts a raster to the network input: CHW, values shifted by -0.5.
Tensor to_tensor(const ImageRaster& img);

struct ParamRange {
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t end() const { return offset + size; }
};

/// Which parameter groups receive gradients in backward().
enum class Trainable { all, heads_and_regressor, regressor_only };

/// Shared backbone, five two-layer attribute heads and an optional MOS
/// regressor over the concatenated head hidden activations. All parameters
/// live in one flat vector: backbone, heads in canonical order, regressor.
class AttributeModel {
 public:
  struct Output {
    PerAttribute<double> attributes;
    PerAttribute<std::vector<double>> features;  // post-ReLU head hidden layer
    std::optional<double> mos;
  };

  /// Activations retained by forward() for backward().
  struct Trace {
    std::vector<Tensor> conv_inputs;
    std::vector<Tensor> conv_preact;
    std::vector<double> pooled;
    PerAttribute<std::vector<double>> head_preact;
    PerAttribute<std::vector<double>> head_hidden;
    std::vector<double> reg_input;
    std::vector<double> reg_preact;
  };

  AttributeModel() = default;

  /// Seeded He-normal weights, zero biases. Throws ValidationError for
  /// inconsistent specs or unavailable backbones.
  static AttributeModel init(const ModelSpec& spec, std::uint64_t seed);
  static AttributeModel from_parameters(const ModelSpec& spec, std::vector<double> params);

  /// Adds (or replaces) a freshly initialized regressor.
  void attach_regressor(int reg_hidden, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  bool has_regressor() const { return spec_.reg_hidden.has_value(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  ParamRange backbone_range() const { return backbone_; }
  ParamRange head_range(Attribute a) const { return heads_[a]; }
  ParamRange heads_range() const;
  /// Throws ValidationError when the regressor is absent.
  ParamRange regressor_range() const;
  /// Range [offset, end) of the head's final (hidden -> 1) layer.
  ParamRange head_output_layer(Attribute a) const;

  Output forward(const Tensor& input, bool with_mos, Trace* trace = nullptr) const;

  /// Adds dL/dparams to `grad` given dL/dE_a and dL/dmos.
  void backward(const Trace& trace, const PerAttribute<double>& d_attributes, double d_mos,
                std::span<double> grad, Trainable trainable = Trainable::all) const;

  PerAttribute<double> forward_attributes(const ImageRaster& img) const;
  PerAttribute<std::vector<double>> head_features(const ImageRaster& img) const;
  /// head_features concatenated in canonical attribute order.
  std::vector<double> concat_head_features(const ImageRaster& img) const;
  /// Throws ValidationError("no regressor") for pretrain-only models.
  double forward_mos(const ImageRaster& img) const;
  /// Regressor applied to an explicit feature vector.
  double regress(std::span<const double> features) const;

  /// SHA-256 over the raw bytes of a parameter range.
  std::string checksum(ParamRange range) const;
  std::string checksum() const;

 private:
  struct Dense {
    int in = 0;
    int out = 0;
    ParamRange w;
    ParamRange b;
  };
  struct Conv {
    int in = 0;
    int out = 0;
    ParamRange w;  // out x in x 3 x 3
    ParamRange b;
  };

  void layout();

  ModelSpec spec_;
  std::vector<double> params_;
  std::vector<Conv> convs_;
  PerAttribute<Dense> head_in_;
  PerAttribute<Dense> head_out_;
  Dense reg_in_;
  Dense reg_out_;
  ParamRange backbone_;
  PerAttribute<ParamRange> heads_;
  ParamRange regressor_;
};

}  // namespace attiqa
