#ifndef NADINE_NETWORK_HPP
#define NADINE_NETWORK_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/batch.hpp"
#include "nadine/classifier.hpp"
#include "nadine/extractor.hpp"
#include "nadine/forgetting.hpp"
#include "nadine/memory.hpp"
#include "nadine/ns.hpp"
#include "nadine/random.hpp"

namespace nadine {

struct NetworkConfig {
  ExtractorConfig extractor;
  std::size_t classes = 3;
  std::size_t initial_width = 3;
  Activation hidden_activation = Activation::Sigmoid;
  double momentum = 0.95;
  NsConfig ns;
  /// Node growing/pruning and layer insertion. Off keeps the initial structure.
  bool evolve = true;

  void validate() const {
    extractor.validate();
    ns.validate();
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (initial_width < 1) throw ConfigError("initial_width must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  }
};

enum class EventKind { NodeAdded, NodePruned, LayerAdded };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::NodeAdded: return "node_added";
    case EventKind::NodePruned: return "node_pruned";
    case EventKind::LayerAdded: return "layer_added";
  }
  return "node_added";
}

inline EventKind event_kind_from_string(std::string_view s) {
  if (s == "node_added") return EventKind::NodeAdded;
  if (s == "node_pruned") return EventKind::NodePruned;
  if (s == "layer_added") return EventKind::LayerAdded;
  throw ParseError(0, 0, "unknown event kind '" + std::string(s) + "'");
}

struct StructuralEvent {
  EventKind kind = EventKind::NodeAdded;
  /// Pruned node index; unused for the other kinds.
  std::size_t node = 0;
  std::size_t batch = 0;
  std::size_t sample = 0;

  bool operator==(const StructuralEvent&) const = default;
};

/// Inputs of one stream sample, already in the network's precision.
template <typename T>
struct Sample {
  std::optional<Tensor<T>> sensors;
  std::optional<Tensor<T>> image;

  const Tensor<T>* sensor_ptr() const { return sensors ? &*sensors : nullptr; }
  const Tensor<T>* image_ptr() const { return image ? &*image : nullptr; }
};

template <typename T>
Sample<T> sample_of(const StreamBatch& batch, std::size_t i) {
  Sample<T> s;
  if (batch.has_sensors()) s.sensors = batch.sensor_row(i).template cast<T>();
  if (batch.images) s.image = (*batch.images)[i].template cast<T>();
  return s;
}

/// Result of one test-then-train step on a single sample.
struct TrainStep {
  std::vector<double> features;
  std::vector<double> probs;
  double bias2 = 0.0;
  double variance = 0.0;
  std::optional<StructuralEvent> event;
};

/// Per-layer view of a batch forward pass, in double precision.
struct BatchActivations {
  std::vector<Tensor<double>> hidden;  // [N, width_l] per hidden layer
  Tensor<double> probs;                // [N, m]
};

template <typename T = double>
class EvolvingNetwork {
 public:
  EvolvingNetwork() = default;

  EvolvingNetwork(NetworkConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
    extractor_ = FeatureExtractor<T>(cfg_.extractor, rng_);
    stack_ = DenseStack<T>(extractor_.output_size(), cfg_.initial_width, cfg_.classes, cfg_.hidden_activation, rng_);
    ns_ = NsState(extractor_.output_size());
    begin_batch();
  }

  const NetworkConfig& config() const noexcept { return cfg_; }
  std::size_t classes() const noexcept { return cfg_.classes; }
  std::size_t depth() const noexcept { return stack_.depth(); }
  std::size_t width() const { return stack_.last_width(); }
  std::size_t feature_size() const noexcept { return extractor_.output_size(); }

  FeatureExtractor<T>& extractor() noexcept { return extractor_; }
  const FeatureExtractor<T>& extractor() const noexcept { return extractor_; }
  DenseStack<T>& stack() noexcept { return stack_; }
  const DenseStack<T>& stack() const noexcept { return stack_; }
  NsState& ns() noexcept { return ns_; }
  const NsState& ns() const noexcept { return ns_; }
  Rng& rng() noexcept { return rng_; }
  const Rng& rng() const noexcept { return rng_; }
  const std::vector<StructuralEvent>& events() const noexcept { return events_; }
  std::vector<StructuralEvent>& events() noexcept { return events_; }
  const std::vector<double>& activation_sums() const noexcept { return act_sum_; }
  const std::vector<std::size_t>& activation_counts() const noexcept { return act_count_; }
  void restore_activation_stats(std::vector<double> sums, std::vector<std::size_t> counts) {
    act_sum_ = std::move(sums);
    act_count_ = std::move(counts);
  }

  Tensor<T> features(const Sample<T>& s) const { return extractor_.infer(s.sensor_ptr(), s.image_ptr()); }
  Tensor<T> predict(const Sample<T>& s) const { return stack_.infer(features(s)); }

  BatchActivations activations(const StreamBatch& batch) const {
    const std::size_t n = batch.size();
    BatchActivations out;
    std::vector<std::vector<double>> hidden(depth());
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
      const auto all = stack_.infer_all(features(sample_of<T>(batch, i)));
      for (std::size_t l = 0; l < depth(); ++l)
        for (T v : all[l]) hidden[l].push_back(static_cast<double>(v));
      for (T v : all.back()) probs.push_back(static_cast<double>(v));
    }
    for (std::size_t l = 0; l < depth(); ++l) {
      const std::size_t w = stack_.hidden()[l].out();
      out.hidden.emplace_back(Shape{n, w}, std::move(hidden[l]));
    }
    out.probs = Tensor<double>({n, cfg_.classes}, std::move(probs));
    return out;
  }

  /// Estimated squared bias ||f(mu) - y||^2 and variance ||f(x) - f(mu)||^2
  /// of the classifier at feature vector z. (0, 0) before any sample.
  std::pair<double, double> bias_variance(const Tensor<T>& z, std::size_t label) const {
    if (ns_.bootstrapping()) return {0.0, 0.0};
    Tensor<T> mu({ns_.feature_mean.size()});
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = static_cast<T>(ns_.feature_mean[i]);
    const Tensor<T> fx = stack_.infer(z), fmu = stack_.infer(mu);
    double bias2 = 0.0, variance = 0.0;
    for (std::size_t k = 0; k < fx.size(); ++k) {
      const double y = k == label ? 1.0 : 0.0;
      const double b = static_cast<double>(fmu[k]) - y;
      const double v = static_cast<double>(fx[k]) - static_cast<double>(fmu[k]);
      bias2 += b * b;
      variance += v * v;
    }
    return {bias2, variance};
  }

  /// Clears the per-node activation statistics used to rank prune candidates.
  void begin_batch() {
    act_sum_.assign(width(), 0.0);
    act_count_.assign(width(), 0);
  }

  /// Mean |activation| over the batch so far times the outgoing weight norm.
  /// Nodes without observations this batch rank as +infinity.
  std::vector<double> contributions() const {
    const auto& head = stack_.head().weights().value;
    std::vector<double> c(width());
    for (std::size_t j = 0; j < c.size(); ++j) {
      double norm = 0.0;
      for (std::size_t k = 0; k < head.extent(1); ++k) norm += static_cast<double>(head(j, k)) * static_cast<double>(head(j, k));
      c[j] = act_count_[j] > 0 ? act_sum_[j] / static_cast<double>(act_count_[j]) * std::sqrt(norm)
                               : std::numeric_limits<double>::infinity();
    }
    return c;
  }

  /// Per-sample NS update, optional grow/prune of the last hidden layer, then
  /// one SGD step over extractor and classifier.
  TrainStep train_sample(const Sample<T>& s, std::size_t label, const LayerRatePlan& plan, std::size_t batch,
                         std::size_t sample) {
    TrainStep out;
    extractor_.zero_grad();
    const Tensor<T> z = extractor_.forward(s.sensor_ptr(), s.image_ptr());
    out.features.assign(z.begin(), z.end());
    const Tensor<T> probs = stack_.infer(z);
    out.probs.assign(probs.begin(), probs.end());

    if (cfg_.evolve) {
      std::tie(out.bias2, out.variance) = bias_variance(z, label);
      const bool boot = ns_.bootstrapping();
      ns_.update_features(out.features, cfg_.ns);
      if (!boot) {
        const NsDecision d = ns_.observe(out.bias2, out.variance, cfg_.ns);
        if (d.grow) {
          out.event = grow_node(batch, sample);
        } else if (d.prune && width() >= 2) {
          const auto c = contributions();
          const auto idx = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
          if (std::isfinite(c[idx])) out.event = prune_node(idx, batch, sample);
        }
      }
    }

    stack_.zero_grad();
    stack_.forward(z);
    const auto& last = stack_.hidden().back().last_output();
    for (std::size_t j = 0; j < act_sum_.size(); ++j) {
      act_sum_[j] += std::abs(static_cast<double>(last[j]));
      ++act_count_[j];
    }
    const Tensor<T> dz = stack_.backward(one_hot<T>(label, cfg_.classes));
    stack_.step(classifier_rates(plan), static_cast<T>(cfg_.momentum));
    if (extractor_.has_trainable_layers()) {
      extractor_.backward(dz);
      if (!extractor_.grads_finite()) throw TrainingError(0, "non-finite extractor gradient");
      extractor_.step(static_cast<T>(plan.extractor), static_cast<T>(cfg_.momentum));
    }
    return out;
  }

  /// Plain SGD on one sample through the whole network, no structural learning.
  void fit_sample(const Sample<T>& s, std::size_t label, const LayerRatePlan& plan) {
    extractor_.zero_grad();
    const Tensor<T> z = extractor_.forward(s.sensor_ptr(), s.image_ptr());
    stack_.zero_grad();
    stack_.forward(z);
    const Tensor<T> dz = stack_.backward(one_hot<T>(label, cfg_.classes));
    stack_.step(classifier_rates(plan), static_cast<T>(cfg_.momentum));
    if (extractor_.has_trainable_layers()) {
      extractor_.backward(dz);
      extractor_.step(static_cast<T>(plan.extractor), static_cast<T>(cfg_.momentum));
    }
  }

  /// Plain SGD on a stored feature vector; the extractor is left untouched.
  void fit_features(std::span<const double> features, std::size_t label, const LayerRatePlan& plan) {
    Tensor<T> z({features.size()});
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<T>(features[i]);
    stack_.backward_and_step(z, one_hot<T>(label, cfg_.classes), classifier_rates(plan), static_cast<T>(cfg_.momentum));
  }

  StructuralEvent grow_node(std::size_t batch, std::size_t sample) {
    stack_.hidden().back().add_output(rng_);
    stack_.head().add_input(rng_);
    act_sum_.push_back(0.0);
    act_count_.push_back(0);
    return record({EventKind::NodeAdded, 0, batch, sample});
  }

  StructuralEvent prune_node(std::size_t idx, std::size_t batch, std::size_t sample) {
    if (width() < 2) throw StructuralError("cannot prune the only node of the last hidden layer");
    stack_.hidden().back().remove_output(idx);
    stack_.head().remove_input(idx);
    act_sum_.erase(act_sum_.begin() + static_cast<std::ptrdiff_t>(idx));
    act_count_.erase(act_count_.begin() + static_cast<std::ptrdiff_t>(idx));
    return record({EventKind::NodePruned, idx, batch, sample});
  }

  /// Stacks a fresh width-m hidden layer, re-initializes the head m -> m and
  /// replays memory (classifier only) and the warning buffer (full network)
  /// for one pass at the uniform rate `replay_rate`.
  StructuralEvent add_layer(std::size_t batch, std::size_t sample, const MemoryStore* memory,
                            const std::vector<StreamBatch>* warning, double replay_rate = 0.02) {
    const std::size_t m = cfg_.classes;
    stack_.hidden().emplace_back(width(), m, cfg_.hidden_activation, rng_);
    stack_.head() = DenseLayer<T>(m, m, Activation::Identity, rng_);
    stack_.check_chain();
    begin_batch();
    const StructuralEvent ev = record({EventKind::LayerAdded, 0, batch, sample});
    const LayerRatePlan plan = LayerRatePlan::uniform(depth(), replay_rate);
    if (memory) {
      for (const auto& e : memory->entries()) fit_features(e.features, e.label, plan);
    }
    if (warning) {
      for (const auto& b : *warning)
        for (std::size_t i = 0; i < b.size(); ++i) fit_sample(sample_of<T>(b, i), b.labels[i], plan);
    }
    return ev;
  }

 private:
  std::vector<T> classifier_rates(const LayerRatePlan& plan) const {
    std::vector<T> r;
    r.reserve(stack_.trainable_layers());
    // Layers stacked after the plan was made run at the head rate.
    for (std::size_t l = 0; l < depth(); ++l)
      r.push_back(static_cast<T>(l + 1 < plan.rates.size() ? plan.rates[l] : plan.rates.back()));
    r.push_back(static_cast<T>(plan.rates.back()));
    return r;
  }

  StructuralEvent record(StructuralEvent e) {
    events_.push_back(e);
    return e;
  }

  NetworkConfig cfg_;
  Rng rng_;
  FeatureExtractor<T> extractor_;
  DenseStack<T> stack_;
  NsState ns_;
  std::vector<StructuralEvent> events_;
  std::vector<double> act_sum_;
  std::vector<std::size_t> act_count_;
};

}  // namespace nadine

#endif  // NADINE_NETWORK_HPP
