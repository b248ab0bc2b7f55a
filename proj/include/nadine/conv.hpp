#ifndef NADINE_CONV_HPP
#define NADINE_CONV_HPP

#include <cstddef>
#include <string>

#include "nadine/errors.hpp"
#include "nadine/random.hpp"
#include "nadine/sgd.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

enum class ConvKind { OneD, TwoD };
enum class Shortcut { None, Identity, Projection };

struct ConvSpec {
  ConvKind kind = ConvKind::OneD;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  Shortcut shortcut = Shortcut::None;
};

/// Output extent of a strided, zero-padded window scan.
inline std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                                      std::size_t padding) {
  if (extent + 2 * padding < kernel) {
    throw DimensionError("spatial extent " + std::to_string(extent) + " with padding " +
                         std::to_string(padding) + " is smaller than kernel " + std::to_string(kernel));
  }
  return (extent + 2 * padding - kernel) / stride + 1;
}

/// Convolution layer (cross-correlation, no kernel flip) with an optional
/// residual shortcut, producing F(X, W) + S(X).
///
/// One-dimensional layers take [in_ch, length]; two-dimensional layers take
/// [in_ch, height, width]. Filters are stored as [out, in, g] or
/// [out, in, g, g]. The projection shortcut is a channel-mixing matrix
/// [out, in] sampled at the strided output positions (a 1x1 convolution).
template <typename T = double>
class ConvLayer {
 public:
  ConvLayer() = default;

  ConvLayer(const ConvSpec& spec, Rng& rng) : spec_(spec) {
    validate();
    filters_ = Parameter<T>(Tensor<T>(filter_shape()));
    bias_ = Parameter<T>(Tensor<T>({spec_.out_channels}));
    const std::size_t taps = taps_per_channel();
    xavier_fill(filters_.value, spec_.in_channels * taps, spec_.out_channels * taps, rng);
    if (spec_.shortcut == Shortcut::Projection) {
      projection_ = Parameter<T>(Tensor<T>({spec_.out_channels, spec_.in_channels}));
      xavier_fill(projection_.value, spec_.in_channels, spec_.out_channels, rng);
    }
  }

  /// Zero-initialized layer; callers set parameters explicitly.
  explicit ConvLayer(const ConvSpec& spec) : spec_(spec) {
    validate();
    filters_ = Parameter<T>(Tensor<T>(filter_shape()));
    bias_ = Parameter<T>(Tensor<T>({spec_.out_channels}));
    if (spec_.shortcut == Shortcut::Projection) {
      projection_ = Parameter<T>(Tensor<T>({spec_.out_channels, spec_.in_channels}));
    }
  }

  const ConvSpec& spec() const noexcept { return spec_; }
  Parameter<T>& filters() noexcept { return filters_; }
  const Parameter<T>& filters() const noexcept { return filters_; }
  Parameter<T>& bias() noexcept { return bias_; }
  const Parameter<T>& bias() const noexcept { return bias_; }
  Parameter<T>& projection() noexcept { return projection_; }
  const Parameter<T>& projection() const noexcept { return projection_; }
  bool has_projection() const noexcept { return spec_.shortcut == Shortcut::Projection; }

  /// Output shape for a given input shape.
  Shape output_shape(const Shape& input) const {
    const Geometry g = geometry(input);
    if (spec_.kind == ConvKind::OneD) return {spec_.out_channels, g.out_w};
    return {spec_.out_channels, g.out_h, g.out_w};
  }

  Tensor<T> infer(const Tensor<T>& x) const { return run_forward(x); }

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    return run_forward(x);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    const Geometry g = geometry(input_.shape());
    if (grad_out.size() != spec_.out_channels * g.out_h * g.out_w) {
      throw DimensionError("conv backward gradient " + shape_string(grad_out.shape()) +
                           " does not match output of input " + shape_string(input_.shape()));
    }
    Tensor<T> grad_in(input_.shape());
    const std::size_t k = spec_.kernel;
    const std::size_t kh = kernel_h();
    const std::size_t ph = pad_h();
    const std::size_t s = spec_.stride;
    const std::size_t p = spec_.padding;
    const std::size_t cin = spec_.in_channels;
    auto& gf = filters_.grad.storage();
    const auto& f = filters_.value.storage();
    for (std::size_t o = 0; o < spec_.out_channels; ++o) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const T go = grad_out[(o * g.out_h + oy) * g.out_w + ox];
          bias_.grad[o] += go;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(ph);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                const std::size_t fi = ((o * cin + c) * kh + ky) * k + kx;
                const std::size_t xi = (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w + static_cast<std::size_t>(ix);
                gf[fi] += go * input_[xi];
                grad_in[xi] += go * f[fi];
              }
            }
          }
          switch (spec_.shortcut) {
            case Shortcut::None: break;
            case Shortcut::Identity: grad_in[(o * g.in_h + oy) * g.in_w + ox] += go; break;
            case Shortcut::Projection:
              for (std::size_t c = 0; c < cin; ++c) {
                const std::size_t xi = (c * g.in_h + oy * s) * g.in_w + ox * s;
                projection_.grad(o, c) += go * input_[xi];
                grad_in[xi] += go * projection_.value(o, c);
              }
              break;
          }
        }
      }
    }
    return grad_in;
  }

  void zero_grad() {
    filters_.zero_grad();
    bias_.zero_grad();
    if (has_projection()) projection_.zero_grad();
  }

  bool grads_finite() const {
    return filters_.grad_finite() && bias_.grad_finite() && (!has_projection() || projection_.grad_finite());
  }

  void step(T rate, T momentum) {
    filters_.step(rate, momentum);
    bias_.step(rate, momentum);
    if (has_projection()) projection_.step(rate, momentum);
  }

 private:
  struct Geometry {
    std::size_t in_h, in_w, out_h, out_w;
  };

  std::size_t kernel_h() const { return spec_.kind == ConvKind::OneD ? 1 : spec_.kernel; }
  std::size_t pad_h() const { return spec_.kind == ConvKind::OneD ? 0 : spec_.padding; }
  std::size_t taps_per_channel() const { return kernel_h() * spec_.kernel; }

  Shape filter_shape() const {
    if (spec_.kind == ConvKind::OneD) return {spec_.out_channels, spec_.in_channels, spec_.kernel};
    return {spec_.out_channels, spec_.in_channels, spec_.kernel, spec_.kernel};
  }

  void validate() const {
    if (spec_.in_channels == 0 || spec_.out_channels == 0 || spec_.kernel == 0 || spec_.stride == 0) {
      throw ConfigError("conv channels, kernel and stride must be positive");
    }
    if (spec_.shortcut == Shortcut::Identity) {
      if (spec_.in_channels != spec_.out_channels) {
        throw ConfigError("identity shortcut requires in_channels == out_channels (" +
                          std::to_string(spec_.in_channels) + " vs " + std::to_string(spec_.out_channels) + ")");
      }
      if (spec_.stride != 1 || 2 * spec_.padding + 1 != spec_.kernel) {
        throw ConfigError("identity shortcut requires a size-preserving convolution (stride 1, padding (g-1)/2)");
      }
    }
  }

  Geometry geometry(const Shape& in) const {
    const std::size_t want_rank = spec_.kind == ConvKind::OneD ? 2 : 3;
    if (in.size() != want_rank || in[0] != spec_.in_channels) {
      throw DimensionError("conv input " + shape_string(in) + " incompatible with " +
                           std::to_string(spec_.in_channels) + " input channels");
    }
    Geometry g{};
    g.in_h = spec_.kind == ConvKind::OneD ? 1 : in[1];
    g.in_w = in.back();
    g.out_h = spec_.kind == ConvKind::OneD ? 1 : conv_output_extent(g.in_h, spec_.kernel, spec_.stride, spec_.padding);
    g.out_w = conv_output_extent(g.in_w, spec_.kernel, spec_.stride, spec_.padding);
    if (spec_.shortcut == Shortcut::Projection) {
      const std::size_t sh = spec_.kind == ConvKind::OneD ? 1 : (g.in_h - 1) / spec_.stride + 1;
      const std::size_t sw = (g.in_w - 1) / spec_.stride + 1;
      if (sh != g.out_h || sw != g.out_w) {
        throw ConfigError("projection shortcut grid does not match convolution output for input " + shape_string(in));
      }
    }
    return g;
  }

  Tensor<T> run_forward(const Tensor<T>& x) const {
    const Geometry g = geometry(x.shape());
    Tensor<T> out(output_shape(x.shape()));
    const std::size_t k = spec_.kernel;
    const std::size_t kh = kernel_h();
    const std::size_t ph = pad_h();
    const std::size_t s = spec_.stride;
    const std::size_t p = spec_.padding;
    const std::size_t cin = spec_.in_channels;
    const auto& f = filters_.value.storage();
    for (std::size_t o = 0; o < spec_.out_channels; ++o) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = bias_.value[o];
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(ph);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                acc += f[((o * cin + c) * kh + ky) * k + kx] *
                       x[(c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w + static_cast<std::size_t>(ix)];
              }
            }
          }
          switch (spec_.shortcut) {
            case Shortcut::None: break;
            case Shortcut::Identity: acc += x[(o * g.in_h + oy) * g.in_w + ox]; break;
            case Shortcut::Projection:
              for (std::size_t c = 0; c < cin; ++c) {
                acc += projection_.value(o, c) * x[(c * g.in_h + oy * s) * g.in_w + ox * s];
              }
              break;
          }
          out[(o * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
    return out;
  }

  ConvSpec spec_;
  Parameter<T> filters_;
  Parameter<T> bias_;
  Parameter<T> projection_;
  Tensor<T> input_;
};

/// Mean over all spatial positions of each channel: [C, ...] -> [C].
template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x) {
  const std::size_t c = x.extent(0);
  const std::size_t per = x.size() / c;
  Tensor<T> out({c});
  for (std::size_t i = 0; i < c; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < per; ++j) acc += x[i * per + j];
    out[i] = acc / static_cast<T>(per);
  }
  return out;
}

template <typename T>
Tensor<T> global_average_pool_backward(const Tensor<T>& grad_out, const Shape& input_shape) {
  Tensor<T> grad(input_shape);
  const std::size_t c = input_shape[0];
  const std::size_t per = grad.size() / c;
  for (std::size_t i = 0; i < c; ++i) {
    const T g = grad_out[i] / static_cast<T>(per);
    for (std::size_t j = 0; j < per; ++j) grad[i * per + j] = g;
  }
  return grad;
}

}  // namespace nadine

#endif  // NADINE_CONV_HPP
