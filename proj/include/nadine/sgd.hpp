#ifndef NADINE_SGD_HPP
#define NADINE_SGD_HPP

#include <cmath>
#include <string>

#include "nadine/errors.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

struct SgdConfig {
  double learning_rate = 0.02;
  double momentum = 0.95;

  void validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
      throw ConfigError("learning_rate must lie in (0, 1], got " + std::to_string(learning_rate));
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw ConfigError("momentum must lie in [0, 1), got " + std::to_string(momentum));
    }
  }
};

/// A trainable tensor together with its accumulated gradient and momentum
/// buffer. All three always share one shape.
template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> velocity;

  Parameter() = default;
  explicit Parameter(Tensor<T> v) : value(std::move(v)), grad(value.shape()), velocity(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }
  bool grad_finite() const { return grad.all_finite(); }

  /// v <- momentum*v - rate*grad ; p <- p + v
  void step(T rate, T momentum) {
    auto& p = value.storage();
    auto& v = velocity.storage();
    const auto& g = grad.storage();
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] - rate * g[i];
      p[i] += v[i];
    }
  }

  /// Replace all three tensors at once, used by structural surgery.
  void reset(Tensor<T> v, Tensor<T> vel) {
    value = std::move(v);
    velocity = std::move(vel);
    grad = Tensor<T>(value.shape());
  }
};

}  // namespace nadine

#endif  // NADINE_SGD_HPP
