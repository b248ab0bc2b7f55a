#ifndef NADINE_DENSE_HPP
#define NADINE_DENSE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "nadine/activation.hpp"
#include "nadine/errors.hpp"
#include "nadine/random.hpp"
#include "nadine/sgd.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

/// Fully connected layer h = s(z W + b) with W stored as [in, out].
///
/// Inputs may be a single vector [in] or a block of rows [..., in]; every
/// leading index is treated as an independent sample.
template <typename T = double>
class DenseLayer {
 public:
  DenseLayer() = default;

  DenseLayer(std::size_t in, std::size_t out, Activation act, Rng& rng)
      : weights_(Tensor<T>({in, out})), bias_(Tensor<T>({out})), activation_(act) {
    xavier_fill(weights_.value, in, out, rng);
  }

  DenseLayer(Tensor<T> weights, Tensor<T> bias, Activation act)
      : weights_(std::move(weights)), bias_(std::move(bias)), activation_(act) {
    if (weights_.value.rank() != 2 || bias_.value.rank() != 1 ||
        bias_.value.extent(0) != weights_.value.extent(1)) {
      throw DimensionError("dense layer weights " + shape_string(weights_.value.shape()) +
                           " incompatible with bias " + shape_string(bias_.value.shape()));
    }
  }

  std::size_t in() const { return weights_.value.extent(0); }
  std::size_t out() const { return weights_.value.extent(1); }
  Activation activation() const noexcept { return activation_; }

  Parameter<T>& weights() noexcept { return weights_; }
  const Parameter<T>& weights() const noexcept { return weights_; }
  Parameter<T>& bias() noexcept { return bias_; }
  const Parameter<T>& bias() const noexcept { return bias_; }

  Tensor<T> infer(const Tensor<T>& z) const {
    Tensor<T> pre = affine(z);
    for (auto& v : pre) v = activate(activation_, v);
    return pre;
  }

  /// Forward pass that keeps what backward() needs.
  Tensor<T> forward(const Tensor<T>& z) {
    input_ = z;
    pre_ = affine(z);
    output_ = pre_;
    for (auto& v : output_) v = activate(activation_, v);
    return output_;
  }

  const Tensor<T>& last_output() const noexcept { return output_; }

  /// Accumulates dL/dW and dL/db from dL/dh and returns dL/dz.
  Tensor<T> backward(const Tensor<T>& grad_out) {
    require_same_shape(grad_out, output_, "dense backward");
    const std::size_t n_in = in(), n_out = out();
    const std::size_t rows = input_.size() / n_in;
    Tensor<T> grad_in(input_.shape());
    std::vector<T> delta(n_out);
    const auto& w = weights_.value.storage();
    auto& gw = weights_.grad.storage();
    auto& gb = bias_.grad.storage();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < n_out; ++j) {
        const std::size_t k = r * n_out + j;
        delta[j] = grad_out[k] * activation_slope(activation_, pre_[k], output_[k]);
        gb[j] += delta[j];
      }
      for (std::size_t i = 0; i < n_in; ++i) {
        const T zi = input_[r * n_in + i];
        T acc{0};
        for (std::size_t j = 0; j < n_out; ++j) {
          gw[i * n_out + j] += zi * delta[j];
          acc += w[i * n_out + j] * delta[j];
        }
        grad_in[r * n_in + i] = acc;
      }
    }
    return grad_in;
  }

  void zero_grad() {
    weights_.zero_grad();
    bias_.zero_grad();
  }

  bool grads_finite() const { return weights_.grad_finite() && bias_.grad_finite(); }

  void step(T rate, T momentum) {
    weights_.step(rate, momentum);
    bias_.step(rate, momentum);
  }

  /// Appends one output unit: a Xavier-initialized weight column and a zero bias.
  void add_output(Rng& rng) {
    const std::size_t n_in = in(), n_out = out();
    const double a = xavier_bound(n_in, n_out + 1);
    Tensor<T> w({n_in, n_out + 1}), vw({n_in, n_out + 1});
    for (std::size_t i = 0; i < n_in; ++i) {
      for (std::size_t j = 0; j < n_out; ++j) {
        w(i, j) = weights_.value(i, j);
        vw(i, j) = weights_.velocity(i, j);
      }
      w(i, n_out) = static_cast<T>(rng.uniform(-a, a));
    }
    std::vector<T> b = bias_.value.storage(), vb = bias_.velocity.storage();
    b.push_back(T{0});
    vb.push_back(T{0});
    weights_.reset(std::move(w), std::move(vw));
    bias_.reset(Tensor<T>::vector(std::move(b)), Tensor<T>::vector(std::move(vb)));
  }

  void remove_output(std::size_t idx) {
    const std::size_t n_in = in(), n_out = out();
    if (n_out < 2) throw StructuralError("cannot remove the only output unit of a dense layer");
    if (idx >= n_out) throw StructuralError("output index " + std::to_string(idx) + " out of range");
    Tensor<T> w({n_in, n_out - 1}), vw({n_in, n_out - 1});
    for (std::size_t i = 0; i < n_in; ++i) {
      for (std::size_t j = 0, c = 0; j < n_out; ++j) {
        if (j == idx) continue;
        w(i, c) = weights_.value(i, j);
        vw(i, c) = weights_.velocity(i, j);
        ++c;
      }
    }
    std::vector<T> b = bias_.value.storage(), vb = bias_.velocity.storage();
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(idx));
    vb.erase(vb.begin() + static_cast<std::ptrdiff_t>(idx));
    weights_.reset(std::move(w), std::move(vw));
    bias_.reset(Tensor<T>::vector(std::move(b)), Tensor<T>::vector(std::move(vb)));
  }

  /// Appends one input row, Xavier-initialized for the new fan-in.
  void add_input(Rng& rng) {
    const std::size_t n_in = in(), n_out = out();
    const double a = xavier_bound(n_in + 1, n_out);
    std::vector<T> w = weights_.value.storage(), vw = weights_.velocity.storage();
    for (std::size_t j = 0; j < n_out; ++j) {
      w.push_back(static_cast<T>(rng.uniform(-a, a)));
      vw.push_back(T{0});
    }
    weights_.reset(Tensor<T>({n_in + 1, n_out}, std::move(w)), Tensor<T>({n_in + 1, n_out}, std::move(vw)));
  }

  void remove_input(std::size_t idx) {
    const std::size_t n_in = in(), n_out = out();
    if (n_in < 2) throw StructuralError("cannot remove the only input row of a dense layer");
    if (idx >= n_in) throw StructuralError("input index " + std::to_string(idx) + " out of range");
    std::vector<T> w, vw;
    w.reserve((n_in - 1) * n_out);
    vw.reserve((n_in - 1) * n_out);
    for (std::size_t i = 0; i < n_in; ++i) {
      if (i == idx) continue;
      for (std::size_t j = 0; j < n_out; ++j) {
        w.push_back(weights_.value(i, j));
        vw.push_back(weights_.velocity(i, j));
      }
    }
    weights_.reset(Tensor<T>({n_in - 1, n_out}, std::move(w)), Tensor<T>({n_in - 1, n_out}, std::move(vw)));
  }

 private:
  Tensor<T> affine(const Tensor<T>& z) const {
    const std::size_t n_in = in(), n_out = out();
    if (z.rank() == 0 || z.last_extent() != n_in) {
      throw DimensionError("dense input " + shape_string(z.shape()) + " does not match weights " +
                           shape_string(weights_.value.shape()));
    }
    Shape shape = z.shape();
    shape.back() = n_out;
    Tensor<T> out(shape);
    const std::size_t rows = z.size() / n_in;
    const auto& w = weights_.value.storage();
    const auto& b = bias_.value.storage();
    for (std::size_t r = 0; r < rows; ++r) {
      T* o = &out[r * n_out];
      for (std::size_t j = 0; j < n_out; ++j) o[j] = b[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const T zi = z[r * n_in + i];
        const T* wr = &w[i * n_out];
        for (std::size_t j = 0; j < n_out; ++j) o[j] += zi * wr[j];
      }
    }
    return out;
  }

  Parameter<T> weights_;
  Parameter<T> bias_;
  Activation activation_ = Activation::Identity;

  Tensor<T> input_, pre_, output_;
};

}  // namespace nadine

#endif  // NADINE_DENSE_HPP
