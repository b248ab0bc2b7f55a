#ifndef NADINE_HARNESS_HPP
#define NADINE_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/batch.hpp"
#include "nadine/drift.hpp"
#include "nadine/forgetting.hpp"
#include "nadine/memory.hpp"
#include "nadine/network.hpp"

namespace nadine {

enum class Mode { CurrentBatch, OneStepAhead };

inline std::string_view to_string(Mode m) { return m == Mode::CurrentBatch ? "current-batch" : "one-step-ahead"; }

inline Mode mode_from_string(std::string_view s) {
  if (s == "current-batch") return Mode::CurrentBatch;
  if (s == "one-step-ahead") return Mode::OneStepAhead;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected current-batch or one-step-ahead)");
}

/// What the soft-forgetting correlation is measured against.
enum class RateTarget { Predicted, Labels };

inline std::string_view to_string(RateTarget t) { return t == RateTarget::Predicted ? "predicted" : "labels"; }

inline RateTarget rate_target_from_string(std::string_view s) {
  if (s == "predicted") return RateTarget::Predicted;
  if (s == "labels") return RateTarget::Labels;
  throw ConfigError("unknown rate target '" + std::string(s) + "' (expected predicted or labels)");
}

struct HarnessConfig {
  NetworkConfig network;
  DriftConfig drift;
  std::size_t memory_capacity = 500;
  double hard_delta = 0.55;
  EdgeBand band;
  bool replay = true;
  bool soft_forgetting = true;
  RateTarget rate_target = RateTarget::Predicted;
  double rate_floor = 0.001;
  double rate_cap = 0.02;
  /// Step size of the replay pass that follows a layer insertion.
  double replay_rate = 0.01;
  /// Step size of the convolutional extractor.
  double extractor_rate = 0.0003;
  /// Passes over each batch; only the first runs structural learning.
  std::size_t epochs = 1;
  Mode mode = Mode::CurrentBatch;

  void validate() const {
    network.validate();
    drift.validate();
    if (!(hard_delta > 0.5 && hard_delta <= 1.0)) throw ConfigError("hard_delta must lie in (0.5, 1]");
    if (!(band.lower_confidence > 0.0 && band.lower_confidence < band.upper_confidence &&
          band.upper_confidence < 1.0)) {
      throw ConfigError("edge band confidences must satisfy 0 < lower < upper < 1");
    }
    if (!(rate_floor > 0.0 && rate_floor <= rate_cap && rate_cap <= 1.0)) {
      throw ConfigError("learning rates must satisfy 0 < floor <= cap <= 1");
    }
    if (!(extractor_rate >= 0.0 && extractor_rate <= 1.0)) throw ConfigError("extractor_rate must lie in [0, 1]");
    if (!(replay_rate > 0.0 && replay_rate <= 1.0)) throw ConfigError("replay_rate must lie in (0, 1]");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
  }
};

struct MetricsRecord {
  std::size_t batch = 0;
  std::size_t size = 0;
  std::size_t correct = 0;
  double batch_accuracy = 0.0;
  double cumulative_accuracy = 0.0;
  std::size_t depth = 0;
  std::size_t width = 0;
  DriftState state = DriftState::Stable;
  std::vector<StructuralEvent> events;
  /// Classifier rates used for training this batch: hidden layers then head.
  std::vector<double> rates;
  std::size_t memory_size = 0;
  /// Per-class precision/recall/F1 over the stream so far.
  std::vector<double> precision, recall, f1;
};

/// Confusion counts: rows are true classes, columns predictions.
class Confusion {
 public:
  Confusion() = default;
  explicit Confusion(std::size_t classes) : m_(classes, std::vector<std::size_t>(classes, 0)) {}

  void add(std::size_t truth, std::size_t predicted) { ++m_[truth][predicted]; }
  std::size_t classes() const noexcept { return m_.size(); }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return m_[truth][predicted]; }
  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& r : m_)
      for (auto v : r) s += v;
    return s;
  }
  std::size_t support(std::size_t c) const {
    std::size_t s = 0;
    for (auto v : m_[c]) s += v;
    return s;
  }
  double precision(std::size_t c) const {
    std::size_t col = 0;
    for (const auto& r : m_) col += r[c];
    return col ? static_cast<double>(m_[c][c]) / static_cast<double>(col) : 0.0;
  }
  double recall(std::size_t c) const {
    const std::size_t row = support(c);
    return row ? static_cast<double>(m_[c][c]) / static_cast<double>(row) : 0.0;
  }
  double f1(std::size_t c) const {
    const double p = precision(c), r = recall(c);
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  const std::vector<std::vector<std::size_t>>& counts() const noexcept { return m_; }
  void restore(std::vector<std::vector<std::size_t>> counts) { m_ = std::move(counts); }

 private:
  std::vector<std::vector<std::size_t>> m_;
};

/// Test-then-train learner: network, drift detector, warning buffer and
/// adaptive memory, advanced one batch at a time.
template <typename T = double>
class Prequential {
 public:
  Prequential(HarnessConfig cfg, std::uint64_t seed)
      : cfg_((cfg.validate(), std::move(cfg))),
        net_(cfg_.network, seed),
        detector_(cfg_.drift),
        memory_(net_.feature_size(), cfg_.memory_capacity, cfg_.hard_delta, cfg_.band),
        confusion_(cfg_.network.classes) {}

  const HarnessConfig& config() const noexcept { return cfg_; }
  EvolvingNetwork<T>& network() noexcept { return net_; }
  const EvolvingNetwork<T>& network() const noexcept { return net_; }
  DriftDetector& detector() noexcept { return detector_; }
  const DriftDetector& detector() const noexcept { return detector_; }
  WarningBuffer<StreamBatch>& warning_buffer() noexcept { return warning_; }
  const WarningBuffer<StreamBatch>& warning_buffer() const noexcept { return warning_; }
  AdaptiveMemory& memory() noexcept { return memory_; }
  const AdaptiveMemory& memory() const noexcept { return memory_; }
  Confusion& confusion() noexcept { return confusion_; }
  const Confusion& confusion() const noexcept { return confusion_; }
  std::size_t seen() const noexcept { return seen_; }
  std::size_t correct() const noexcept { return correct_; }
  void restore_counters(std::size_t seen, std::size_t correct) {
    seen_ = seen;
    correct_ = correct;
  }

  /// Accuracy on `batch` without touching any state.
  double score(const StreamBatch& batch) const {
    batch.validate(cfg_.network.classes);
    const BatchActivations acts = net_.activations(batch);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
      hits += argmax(std::span<const double>(acts.probs.values().subspan(i * classes(), classes()))) == batch.labels[i];
    return batch.size() ? static_cast<double>(hits) / static_cast<double>(batch.size()) : 0.0;
  }

  /// Predict and score every sample, then assess drift, adapt and train.
  MetricsRecord process(const StreamBatch& batch) {
    batch.validate(cfg_.network.classes);
    const std::size_t n = batch.size();
    MetricsRecord rec;
    rec.batch = batch.index;
    rec.size = n;

    const BatchActivations acts = net_.activations(batch);
    AccuracyVector errors(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pred = argmax(std::span<const double>(acts.probs.values().subspan(i * classes(), classes())));
      errors[i] = pred != batch.labels[i];
      rec.correct += pred == batch.labels[i];
      confusion_.add(batch.labels[i], pred);
    }
    seen_ += n;
    correct_ += rec.correct;
    rec.batch_accuracy = static_cast<double>(rec.correct) / static_cast<double>(n);
    rec.cumulative_accuracy = static_cast<double>(correct_) / static_cast<double>(seen_);

    const std::size_t events_before = net_.events().size();
    const DriftVerdict verdict = detector_.observe(errors);
    rec.state = verdict.state;
    const std::vector<StreamBatch> replay = warning_.update(verdict.state, batch);
    if (verdict.state == DriftState::Drift && cfg_.network.evolve) {
      net_.add_layer(batch.index, 0, cfg_.replay ? &memory_.store() : nullptr, cfg_.replay ? &replay : nullptr,
                     cfg_.replay_rate);
    }

    const LayerRatePlan plan = rate_plan(acts, batch);
    rec.rates = plan.rates;
    net_.begin_batch();
    for (std::size_t i = 0; i < n; ++i) {
      const Sample<T> s = sample_of<T>(batch, i);
      const TrainStep step = net_.train_sample(s, batch.labels[i], plan, batch.index, i);
      memory_.update_and_admit(step.features, step.probs, batch.labels[i], batch.index);
    }
    for (std::size_t e = 1; e < cfg_.epochs; ++e)
      for (std::size_t i = 0; i < n; ++i) net_.fit_sample(sample_of<T>(batch, i), batch.labels[i], plan);

    rec.events.assign(net_.events().begin() + static_cast<std::ptrdiff_t>(events_before), net_.events().end());
    rec.depth = net_.depth();
    rec.width = net_.width();
    rec.memory_size = memory_.store().size();
    for (std::size_t c = 0; c < classes(); ++c) {
      rec.precision.push_back(confusion_.precision(c));
      rec.recall.push_back(confusion_.recall(c));
      rec.f1.push_back(confusion_.f1(c));
    }
    return rec;
  }

 private:
  std::size_t classes() const noexcept { return cfg_.network.classes; }

  LayerRatePlan rate_plan(const BatchActivations& acts, const StreamBatch& batch) const {
    const std::size_t layers = acts.hidden.size();
    if (!cfg_.soft_forgetting || batch.size() < 2) {
      LayerRatePlan p = LayerRatePlan::uniform(layers, cfg_.rate_cap, cfg_.rate_floor, cfg_.rate_cap);
      p.extractor = cfg_.extractor_rate;
      return p;
    }
    Tensor<double> target = acts.probs;
    if (cfg_.rate_target == RateTarget::Labels) {
      target.fill(0.0);
      for (std::size_t i = 0; i < batch.size(); ++i) target(i, batch.labels[i]) = 1.0;
    }
    std::vector<double> rhos;
    for (const auto& h : acts.hidden) rhos.push_back(layer_correlation(h, target));
    LayerRatePlan p = rates_from_correlation(rhos, cfg_.rate_floor, cfg_.rate_cap);
    p.extractor = cfg_.extractor_rate;
    return p;
  }

  HarnessConfig cfg_;
  EvolvingNetwork<T> net_;
  DriftDetector detector_;
  WarningBuffer<StreamBatch> warning_;
  AdaptiveMemory memory_;
  Confusion confusion_;
  std::size_t seen_ = 0;
  std::size_t correct_ = 0;
};

template <typename T>
struct RunHooks {
  /// Called before batch k is predicted, with the learner as trained on 1..k-1.
  std::function<void(std::size_t, const Prequential<T>&)> before_batch;
  std::function<void(const MetricsRecord&, const Prequential<T>&)> after_batch;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRecord> records;
  Confusion confusion;
  std::vector<StructuralEvent> events;

  double accuracy() const { return records.empty() ? 0.0 : records.back().cumulative_accuracy; }
  std::size_t final_depth() const { return records.empty() ? 0 : records.back().depth; }
  double mean_depth() const {
    if (records.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : records) s += static_cast<double>(r.depth);
    return s / static_cast<double>(records.size());
  }
};

/// Pairs inputs of batch k with labels of batch k+1; the last batch has no
/// target and is dropped. Lengths are cut to the shorter of the two.
inline std::vector<StreamBatch> shift_labels(const std::vector<StreamBatch>& batches) {
  if (batches.size() < 2) {
    throw ConfigError("one-step-ahead mode needs at least 2 batches, got " + std::to_string(batches.size()));
  }
  std::vector<StreamBatch> out;
  for (std::size_t k = 0; k + 1 < batches.size(); ++k) {
    const StreamBatch& x = batches[k];
    const StreamBatch& y = batches[k + 1];
    const std::size_t n = std::min(x.size(), y.size());
    StreamBatch b;
    b.index = x.index;
    if (x.has_sensors()) {
      const std::size_t u = x.sensors.extent(1);
      b.sensors = Tensor<double>(
          {n, u}, std::vector<double>(x.sensors.values().begin(), x.sensors.values().begin() + static_cast<std::ptrdiff_t>(n * u)));
    }
    if (x.images) b.images.emplace(x.images->begin(), x.images->begin() + static_cast<std::ptrdiff_t>(n));
    b.labels.assign(y.labels.begin(), y.labels.begin() + static_cast<std::ptrdiff_t>(n));
    out.push_back(std::move(b));
  }
  return out;
}

template <typename T = double>
RunResult run_prequential(const HarnessConfig& cfg, const std::vector<StreamBatch>& batches, std::uint64_t seed,
                          const RunHooks<T>& hooks = {}) {
  Prequential<T> learner(cfg, seed);
  RunResult result;
  result.seed = seed;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    if (hooks.before_batch) hooks.before_batch(k, learner);
    result.records.push_back(learner.process(batches[k]));
    if (hooks.after_batch) hooks.after_batch(result.records.back(), learner);
  }
  result.confusion = learner.confusion();
  result.events = learner.network().events();
  return result;
}

/// Prequential loop where batch k inputs predict batch k+1 labels.
template <typename T = double>
RunResult one_step_ahead(const HarnessConfig& cfg, const std::vector<StreamBatch>& batches, std::uint64_t seed,
                         const RunHooks<T>& hooks = {}) {
  return run_prequential<T>(cfg, shift_labels(batches), seed, hooks);
}

template <typename T = double>
RunResult run(const HarnessConfig& cfg, const std::vector<StreamBatch>& batches, std::uint64_t seed,
              const RunHooks<T>& hooks = {}) {
  return cfg.mode == Mode::CurrentBatch ? run_prequential<T>(cfg, batches, seed, hooks)
                                        : one_step_ahead<T>(cfg, batches, seed, hooks);
}

}  // namespace nadine

#endif  // NADINE_HARNESS_HPP
