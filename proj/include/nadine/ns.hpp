#ifndef NADINE_NS_HPP
#define NADINE_NS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nadine/errors.hpp"

namespace nadine {

struct NsConfig {
  /// Exponential decay of the running moments; 1/n weighting is used until
  /// 1/n drops below 1 - decay.
  double decay = 0.999;
  /// Plain cumulative averaging instead of decay.
  bool cumulative = false;
  /// Samples observed before grow/prune checks start.
  std::size_t warmup = 10;

  void validate() const {
    if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("ns decay must lie in (0, 1)");
  }
};

/// Scalar mean/variance with weight max(1/n, 1 - decay).
struct RunningMoments {
  double mean = 0.0;
  double var = 0.0;
  std::size_t count = 0;

  void update(double x, const NsConfig& cfg) {
    ++count;
    double w = 1.0 / static_cast<double>(count);
    if (!cfg.cumulative) w = std::max(w, 1.0 - cfg.decay);
    const double d = x - mean;
    mean += w * d;
    var = (1.0 - w) * (var + w * d * d);
  }
  double stddev() const { return std::sqrt(std::max(var, 0.0)); }
};

/// Running statistic with the minimum mean/std seen since the last reset.
struct SpcStatistic {
  RunningMoments moments;
  double min_mean = 0.0;
  double min_std = 0.0;

  void observe(double v, const NsConfig& cfg) {
    moments.update(v, cfg);
    // Minima follow the current values until the warm-up is over.
    if (moments.count <= std::max<std::size_t>(cfg.warmup, 1)) {
      reset();
      return;
    }
    min_mean = std::min(min_mean, moments.mean);
    min_std = std::min(min_std, moments.stddev());
  }
  void reset() {
    min_mean = moments.mean;
    min_std = moments.stddev();
  }
  /// mu + sigma >= mu_min + multiplier * sigma_min
  bool exceeds(double multiplier) const {
    return moments.mean + moments.stddev() >= min_mean + multiplier * min_std;
  }
};

/// Adaptive confidence multiplier 1.25 exp(-s) + 0.75, in (0.75, 2].
inline double confidence_multiplier(double squared) { return 1.25 * std::exp(-squared) + 0.75; }
inline double kappa(double bias2) { return confidence_multiplier(bias2); }
inline double xi(double variance) { return confidence_multiplier(variance); }

struct NsDecision {
  bool grow = false;
  bool prune = false;
};

struct NsState {
  std::vector<double> feature_mean;
  std::vector<double> feature_var;
  SpcStatistic bias;
  SpcStatistic var;
  std::size_t sample_count = 0;

  NsState() = default;
  explicit NsState(std::size_t dim) : feature_mean(dim, 0.0), feature_var(dim, 0.0) {}

  bool bootstrapping() const noexcept { return sample_count == 0; }

  void update_features(std::span<const double> z, const NsConfig& cfg) {
    if (z.size() != feature_mean.size()) {
      throw DimensionError("ns feature dimension " + std::to_string(feature_mean.size()) + " vs " +
                           std::to_string(z.size()));
    }
    ++sample_count;
    double w = 1.0 / static_cast<double>(sample_count);
    if (!cfg.cumulative) w = std::max(w, 1.0 - cfg.decay);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - feature_mean[i];
      feature_mean[i] += w * d;
      feature_var[i] = (1.0 - w) * (feature_var[i] + w * d * d);
    }
  }

  /// Feeds sqrt(bias2) and sqrt(variance) into the SPC statistics and decides.
  /// A grow resets the bias minima and suppresses pruning for this sample.
  NsDecision observe(double bias2, double variance, const NsConfig& cfg) {
    bias.observe(std::sqrt(std::max(bias2, 0.0)), cfg);
    var.observe(std::sqrt(std::max(variance, 0.0)), cfg);
    NsDecision d;
    if (bias.moments.count <= cfg.warmup) return d;
    if (maybe_grow()) {
      d.grow = true;
      return d;
    }
    d.prune = prune_condition();
    if (d.prune) var.reset();
    return d;
  }

  /// Running levels that set the confidence multipliers. A single sample's
  /// Bias^2 can exceed ln 5, which pushes kappa below 1; since the minima never
  /// exceed the current moments the rule would then fire on every such sample.
  double bias_level() const noexcept { return bias.moments.mean * bias.moments.mean; }
  double variance_level() const noexcept { return var.moments.mean * var.moments.mean; }

  /// Growing rule; resets the bias minima when it fires.
  bool maybe_grow() {
    if (!bias.exceeds(kappa(bias_level()))) return false;
    bias.reset();
    return true;
  }

  bool prune_condition() const { return var.exceeds(2.0 * xi(variance_level())); }
};

/// Pruning rule applied to per-node contributions; none for a single node.
/// Resets the variance minima when it fires.
inline std::optional<std::size_t> maybe_prune(NsState& ns, std::span<const double> contributions) {
  if (contributions.size() < 2) return std::nullopt;
  if (!ns.prune_condition()) return std::nullopt;
  ns.var.reset();
  return static_cast<std::size_t>(std::min_element(contributions.begin(), contributions.end()) -
                                  contributions.begin());
}

}  // namespace nadine

#endif  // NADINE_NS_HPP
