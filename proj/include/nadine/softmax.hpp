#ifndef NADINE_SOFTMAX_HPP
#define NADINE_SOFTMAX_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include "nadine/errors.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

/// Row-wise softmax over the last axis, stabilized by the row maximum.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> out(logits.shape());
  const std::size_t m = logits.last_extent();
  const std::size_t rows = logits.size() / m;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = &logits[r * m];
    T* p = &out[r * m];
    const T top = *std::max_element(z, z + m);
    T sum{0};
    for (std::size_t j = 0; j < m; ++j) {
      p[j] = std::exp(z[j] - top);
      sum += p[j];
    }
    for (std::size_t j = 0; j < m; ++j) p[j] /= sum;
  }
  return out;
}

/// y = softmax(W_out^T h + c) with W_out stored [width, m].
template <typename T>
Tensor<T> softmax_head(const Tensor<T>& h, const Tensor<T>& w_out, const Tensor<T>& c) {
  if (w_out.rank() != 2 || h.last_extent() != w_out.extent(0) || c.size() != w_out.extent(1)) {
    throw DimensionError("softmax head: h " + shape_string(h.shape()) + ", W_out " + shape_string(w_out.shape()) +
                         ", c " + shape_string(c.shape()));
  }
  const std::size_t n = w_out.extent(0), m = w_out.extent(1);
  Shape shape = h.shape();
  shape.back() = m;
  Tensor<T> logits(shape);
  const std::size_t rows = h.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      T acc = c[j];
      for (std::size_t i = 0; i < n; ++i) acc += h[r * n + i] * w_out(i, j);
      logits[r * m + j] = acc;
    }
  }
  return softmax(logits);
}

/// Mean cross-entropy of probability rows against one-hot targets.
template <typename T>
T cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
  require_same_shape(probs, targets, "cross entropy");
  const T tiny = std::numeric_limits<T>::min();
  const std::size_t m = probs.last_extent();
  const std::size_t rows = probs.size() / m;
  T loss{0};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (targets[i] != T{0}) loss -= targets[i] * std::log(std::max(probs[i], tiny));
  }
  return loss / static_cast<T>(rows);
}

template <typename T>
Tensor<T> one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw DomainError("label " + std::to_string(label) + " outside [0," + std::to_string(classes) + ")");
  }
  Tensor<T> y({classes});
  y[label] = T{1};
  return y;
}

}  // namespace nadine

#endif  // NADINE_SOFTMAX_HPP
