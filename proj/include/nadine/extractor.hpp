#ifndef NADINE_EXTRACTOR_HPP
#define NADINE_EXTRACTOR_HPP

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nadine/conv.hpp"
#include "nadine/errors.hpp"
#include "nadine/random.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

enum class Fusion { SensorOnly, ImageOnly, Concat };

/// How a sensor sample of u features x window steps is laid out for the 1-D
/// convolution. ChannelAxis: u input channels over `window` positions.
/// FeatureAxis: one input channel over a sequence of u * window values.
enum class SensorLayout { ChannelAxis, FeatureAxis };

inline std::string_view to_string(Fusion f) {
  switch (f) {
    case Fusion::SensorOnly: return "sensor";
    case Fusion::ImageOnly: return "image";
    case Fusion::Concat: return "concat";
  }
  return "sensor";
}

inline Fusion fusion_from_string(std::string_view s) {
  if (s == "sensor") return Fusion::SensorOnly;
  if (s == "image") return Fusion::ImageOnly;
  if (s == "concat") return Fusion::Concat;
  throw ConfigError("unknown fusion '" + std::string(s) + "' (expected sensor, image or concat)");
}

inline std::string_view to_string(SensorLayout l) {
  return l == SensorLayout::ChannelAxis ? "channel" : "feature";
}

inline SensorLayout layout_from_string(std::string_view s) {
  if (s == "channel") return SensorLayout::ChannelAxis;
  if (s == "feature") return SensorLayout::FeatureAxis;
  throw ConfigError("unknown sensor layout '" + std::string(s) + "' (expected channel or feature)");
}

struct ExtractorConfig {
  Fusion fusion = Fusion::SensorOnly;

  std::size_t sensor_features = 48;
  std::size_t window = 1;
  SensorLayout layout = SensorLayout::ChannelAxis;
  std::vector<std::pair<std::size_t, std::size_t>> conv1d_channels{{48, 60}, {60, 40}, {40, 20}};
  std::size_t conv1d_kernel = 3;
  std::size_t conv1d_stride = 1;
  std::size_t conv1d_padding = 1;
  bool conv1d_residual = true;
  /// Feed raw sensor values straight to the classifier.
  bool bypass_sensor_conv = false;

  std::size_t image_channels = 3;
  std::size_t image_height = 12;
  std::size_t image_width = 12;
  /// Channel plan of the 2-D path; each consecutive pair is one residual block.
  std::vector<std::size_t> conv2d_channels{3, 8, 16};
  std::size_t conv2d_kernel = 3;
  std::size_t conv2d_stride = 1;

  bool uses_sensors() const { return fusion != Fusion::ImageOnly; }
  bool uses_images() const { return fusion != Fusion::SensorOnly; }

  void validate() const {
    if (uses_sensors()) {
      if (sensor_features == 0 || window == 0) throw ConfigError("sensor_features and window must be positive");
      if (!bypass_sensor_conv) {
        if (conv1d_channels.empty()) throw ConfigError("sensor path requires at least one 1-D convolution");
        const std::size_t first = layout == SensorLayout::ChannelAxis ? sensor_features : 1;
        if (conv1d_channels.front().first != first) {
          throw ConfigError("first 1-D in-channel must be " + std::to_string(first) + " for the " +
                            std::string(to_string(layout)) + " layout, got " +
                            std::to_string(conv1d_channels.front().first));
        }
        for (std::size_t i = 1; i < conv1d_channels.size(); ++i) {
          if (conv1d_channels[i].first != conv1d_channels[i - 1].second) {
            throw ConfigError("1-D channel plan is not chained at layer " + std::to_string(i));
          }
        }
      }
    }
    if (uses_images()) {
      if (conv2d_channels.size() < 2) throw ConfigError("image path requires at least one 2-D block");
      if (conv2d_channels.front() != image_channels) {
        throw ConfigError("first 2-D channel count must equal image_channels");
      }
      if (image_height == 0 || image_width == 0) throw ConfigError("image size must be positive");
    }
  }
};

/// Maps sensor windows and/or images to the natural-feature vector consumed
/// by the classifier. Every convolution is followed by ReLU; the image path
/// ends in global average pooling; Concat joins [sensor | image].
template <typename T = double>
class FeatureExtractor {
 public:
  FeatureExtractor() = default;

  FeatureExtractor(ExtractorConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.uses_sensors() && !cfg_.bypass_sensor_conv) {
      for (auto [in, out] : cfg_.conv1d_channels) {
        ConvSpec spec{ConvKind::OneD, in, out, cfg_.conv1d_kernel, cfg_.conv1d_stride, cfg_.conv1d_padding,
                      residual_mode(in, out, cfg_.conv1d_residual, cfg_.conv1d_kernel, cfg_.conv1d_stride,
                                    cfg_.conv1d_padding)};
        sensor_layers_.emplace_back(spec, rng);
      }
    }
    if (cfg_.uses_images()) {
      const std::size_t pad = cfg_.conv2d_kernel / 2;
      for (std::size_t i = 0; i + 1 < cfg_.conv2d_channels.size(); ++i) {
        const std::size_t in = cfg_.conv2d_channels[i], out = cfg_.conv2d_channels[i + 1];
        ConvSpec spec{ConvKind::TwoD, in, out, cfg_.conv2d_kernel, cfg_.conv2d_stride, pad,
                      residual_mode(in, out, true, cfg_.conv2d_kernel, cfg_.conv2d_stride, pad)};
        image_layers_.emplace_back(spec, rng);
      }
    }
    output_size_ = compute_output_size();
  }

  const ExtractorConfig& config() const noexcept { return cfg_; }
  std::size_t output_size() const noexcept { return output_size_; }
  std::size_t sensor_output_size() const noexcept { return sensor_size_; }

  std::vector<ConvLayer<T>>& sensor_layers() noexcept { return sensor_layers_; }
  const std::vector<ConvLayer<T>>& sensor_layers() const noexcept { return sensor_layers_; }
  std::vector<ConvLayer<T>>& image_layers() noexcept { return image_layers_; }
  const std::vector<ConvLayer<T>>& image_layers() const noexcept { return image_layers_; }
  bool has_trainable_layers() const noexcept { return !sensor_layers_.empty() || !image_layers_.empty(); }

  /// `sensors` holds u * window values (feature-major); `image` is [C, H, W].
  Tensor<T> infer(const Tensor<T>* sensors, const Tensor<T>* image) const {
    check_inputs(sensors, image);
    Tensor<T> s, im;
    if (cfg_.uses_sensors()) {
      s = sensor_input(*sensors);
      for (const auto& layer : sensor_layers_) s = relu(layer.infer(s));
      s.reshape({s.size()});
    }
    if (cfg_.uses_images()) {
      im = *image;
      for (const auto& layer : image_layers_) im = relu(layer.infer(im));
      im = global_average_pool(im);
    }
    return join(std::move(s), std::move(im));
  }

  Tensor<T> forward(const Tensor<T>* sensors, const Tensor<T>* image) {
    check_inputs(sensors, image);
    sensor_outputs_.clear();
    image_outputs_.clear();
    Tensor<T> s, im;
    if (cfg_.uses_sensors()) {
      s = sensor_input(*sensors);
      for (auto& layer : sensor_layers_) {
        s = relu(layer.forward(s));
        sensor_outputs_.push_back(s);
      }
      sensor_shape_ = s.shape();
      s.reshape({s.size()});
    }
    if (cfg_.uses_images()) {
      im = *image;
      for (auto& layer : image_layers_) {
        im = relu(layer.forward(im));
        image_outputs_.push_back(im);
      }
      image_shape_ = im.shape();
      im = global_average_pool(im);
    }
    return join(std::move(s), std::move(im));
  }

  /// Accumulates parameter gradients from dL/dZ. Must follow forward().
  void backward(const Tensor<T>& grad_features) {
    if (grad_features.size() != output_size_) {
      throw DimensionError("extractor gradient " + shape_string(grad_features.shape()) + " vs feature length " +
                           std::to_string(output_size_));
    }
    std::size_t offset = 0;
    if (cfg_.uses_sensors()) {
      if (!sensor_layers_.empty()) {
        Tensor<T> g(sensor_shape_);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_features[i];
        for (std::size_t l = sensor_layers_.size(); l-- > 0;) {
          relu_mask(g, sensor_outputs_[l]);
          g = sensor_layers_[l].backward(g);
        }
      }
      offset = sensor_size_;
    }
    if (cfg_.uses_images() && !image_layers_.empty()) {
      Tensor<T> pooled({output_size_ - offset});
      for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] = grad_features[offset + i];
      Tensor<T> g = global_average_pool_backward(pooled, image_shape_);
      for (std::size_t l = image_layers_.size(); l-- > 0;) {
        relu_mask(g, image_outputs_[l]);
        g = image_layers_[l].backward(g);
      }
    }
  }

  void zero_grad() {
    for (auto& l : sensor_layers_) l.zero_grad();
    for (auto& l : image_layers_) l.zero_grad();
  }

  bool grads_finite() const {
    for (const auto& l : sensor_layers_)
      if (!l.grads_finite()) return false;
    for (const auto& l : image_layers_)
      if (!l.grads_finite()) return false;
    return true;
  }

  void step(T rate, T momentum) {
    for (auto& l : sensor_layers_) l.step(rate, momentum);
    for (auto& l : image_layers_) l.step(rate, momentum);
  }

 private:
  static Shortcut residual_mode(std::size_t in, std::size_t out, bool residual, std::size_t kernel,
                                std::size_t stride, std::size_t padding) {
    if (!residual) return Shortcut::None;
    const bool preserves = stride == 1 && 2 * padding + 1 == kernel;
    if (in == out && preserves) return Shortcut::Identity;
    return Shortcut::Projection;
  }

  static Tensor<T> relu(Tensor<T> x) {
    for (auto& v : x) v = v > T{0} ? v : T{0};
    return x;
  }

  static void relu_mask(Tensor<T>& grad, const Tensor<T>& output) {
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (!(output[i] > T{0})) grad[i] = T{0};
  }

  void check_inputs(const Tensor<T>* sensors, const Tensor<T>* image) const {
    if (cfg_.uses_sensors()) {
      if (!sensors) throw InputError("missing required modality: sensors");
      if (sensors->size() != cfg_.sensor_features * cfg_.window) {
        throw DimensionError("sensor sample has " + std::to_string(sensors->size()) + " values, expected " +
                             std::to_string(cfg_.sensor_features * cfg_.window));
      }
    }
    if (cfg_.uses_images()) {
      if (!image) throw InputError("missing required modality: image");
      const Shape want{cfg_.image_channels, cfg_.image_height, cfg_.image_width};
      if (image->shape() != want) {
        throw DimensionError("image " + shape_string(image->shape()) + " does not match " + shape_string(want));
      }
    }
  }

  Tensor<T> sensor_input(const Tensor<T>& sensors) const {
    if (cfg_.layout == SensorLayout::ChannelAxis) return sensors.reshaped({cfg_.sensor_features, cfg_.window});
    return sensors.reshaped({1, cfg_.sensor_features * cfg_.window});
  }

  Tensor<T> join(Tensor<T> s, Tensor<T> im) const {
    if (!cfg_.uses_images()) return s;
    if (!cfg_.uses_sensors()) return im;
    return concat(s, im);
  }

  std::size_t compute_output_size() {
    sensor_size_ = 0;
    std::size_t image_size = 0;
    if (cfg_.uses_sensors()) {
      Shape shape = cfg_.layout == SensorLayout::ChannelAxis
                        ? Shape{cfg_.sensor_features, cfg_.window}
                        : Shape{1, cfg_.sensor_features * cfg_.window};
      for (const auto& layer : sensor_layers_) shape = layer.output_shape(shape);
      sensor_size_ = shape_size(shape);
    }
    if (cfg_.uses_images()) {
      Shape shape{cfg_.image_channels, cfg_.image_height, cfg_.image_width};
      for (const auto& layer : image_layers_) shape = layer.output_shape(shape);
      image_size = shape[0];
    }
    return sensor_size_ + image_size;
  }

  ExtractorConfig cfg_;
  std::vector<ConvLayer<T>> sensor_layers_;
  std::vector<ConvLayer<T>> image_layers_;
  std::size_t output_size_ = 0;
  std::size_t sensor_size_ = 0;

  std::vector<Tensor<T>> sensor_outputs_, image_outputs_;
  Shape sensor_shape_, image_shape_;
};

}  // namespace nadine

#endif  // NADINE_EXTRACTOR_HPP
