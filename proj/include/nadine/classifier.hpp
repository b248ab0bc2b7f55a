#ifndef NADINE_CLASSIFIER_HPP
#define NADINE_CLASSIFIER_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nadine/dense.hpp"
#include "nadine/errors.hpp"
#include "nadine/softmax.hpp"

namespace nadine {

/// Stack of fully connected hidden layers followed by a softmax head.
/// Trainable layers are indexed 0..depth()-1 for the hidden layers and
/// depth() for the head.
template <typename T = double>
class DenseStack {
 public:
  DenseStack() = default;

  DenseStack(std::size_t inputs, std::size_t width, std::size_t classes, Activation act, Rng& rng) {
    hidden_.emplace_back(inputs, width, act, rng);
    head_ = DenseLayer<T>(width, classes, Activation::Identity, rng);
  }

  DenseStack(std::vector<DenseLayer<T>> hidden, DenseLayer<T> head) : hidden_(std::move(hidden)), head_(std::move(head)) {
    check_chain();
  }

  std::size_t depth() const noexcept { return hidden_.size(); }
  std::size_t trainable_layers() const noexcept { return hidden_.size() + 1; }
  std::size_t inputs() const { return hidden_.front().in(); }
  std::size_t classes() const { return head_.out(); }
  std::size_t last_width() const { return hidden_.back().out(); }

  std::vector<DenseLayer<T>>& hidden() noexcept { return hidden_; }
  const std::vector<DenseLayer<T>>& hidden() const noexcept { return hidden_; }
  DenseLayer<T>& head() noexcept { return head_; }
  const DenseLayer<T>& head() const noexcept { return head_; }

  Tensor<T> infer(const Tensor<T>& z) const {
    Tensor<T> h = z;
    for (const auto& layer : hidden_) h = layer.infer(h);
    return softmax(head_.infer(h));
  }

  /// Hidden activations of every layer plus the output, without caching.
  std::vector<Tensor<T>> infer_all(const Tensor<T>& z) const {
    std::vector<Tensor<T>> out;
    out.reserve(hidden_.size() + 1);
    Tensor<T> h = z;
    for (const auto& layer : hidden_) {
      h = layer.infer(h);
      out.push_back(h);
    }
    out.push_back(softmax(head_.infer(h)));
    return out;
  }

  Tensor<T> forward(const Tensor<T>& z) {
    Tensor<T> h = z;
    for (auto& layer : hidden_) h = layer.forward(h);
    probs_ = softmax(head_.forward(h));
    return probs_;
  }

  /// Cross-entropy of the cached forward pass; accumulates all gradients and
  /// returns dL/dz. Must follow forward().
  Tensor<T> backward(const Tensor<T>& targets, T* loss = nullptr) {
    require_same_shape(probs_, targets, "classifier targets");
    if (loss) *loss = cross_entropy(probs_, targets);
    const std::size_t rows = probs_.size() / classes();
    Tensor<T> g(probs_.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (probs_[i] - targets[i]) / static_cast<T>(rows);
    g = head_.backward(g);
    for (std::size_t l = hidden_.size(); l-- > 0;) g = hidden_[l].backward(g);
    return g;
  }

  void zero_grad() {
    for (auto& layer : hidden_) layer.zero_grad();
    head_.zero_grad();
  }

  /// Applies the momentum update with one rate per trainable layer.
  void step(std::span<const T> rates, T momentum) {
    if (rates.size() != trainable_layers()) {
      throw ConfigError("expected " + std::to_string(trainable_layers()) + " layer rates, got " +
                        std::to_string(rates.size()));
    }
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      if (!hidden_[l].grads_finite()) throw TrainingError(l, "non-finite gradient");
    }
    if (!head_.grads_finite()) throw TrainingError(hidden_.size(), "non-finite gradient");
    for (std::size_t l = 0; l < hidden_.size(); ++l) hidden_[l].step(rates[l], momentum);
    head_.step(rates.back(), momentum);
  }

  /// Forward, cross-entropy backward and one momentum step. Returns the loss.
  T backward_and_step(const Tensor<T>& z, const Tensor<T>& targets, std::span<const T> rates, T momentum) {
    if (rates.size() != trainable_layers()) {
      throw ConfigError("expected " + std::to_string(trainable_layers()) + " layer rates, got " +
                        std::to_string(rates.size()));
    }
    zero_grad();
    forward(z);
    T loss{0};
    backward(targets, &loss);
    step(rates, momentum);
    return loss;
  }

  void check_chain() const {
    if (hidden_.empty()) throw StructuralError("classifier needs at least one hidden layer");
    for (std::size_t l = 1; l < hidden_.size(); ++l) {
      if (hidden_[l - 1].out() != hidden_[l].in()) {
        throw StructuralError("hidden layer " + std::to_string(l) + " input width mismatch");
      }
    }
    if (hidden_.back().out() != head_.in()) throw StructuralError("head input width mismatch");
  }

 private:
  std::vector<DenseLayer<T>> hidden_;
  DenseLayer<T> head_;
  Tensor<T> probs_;
};

}  // namespace nadine

#endif  // NADINE_CLASSIFIER_HPP
