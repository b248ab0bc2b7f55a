#ifndef NADINE_DRIFT_HPP
#define NADINE_DRIFT_HPP

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/errors.hpp"

namespace nadine {

/// Per-sample prequential errors: 1 = misclassified, 0 = correct.
using AccuracyVector = std::vector<std::uint8_t>;

enum class DriftState { Stable, Warning, Drift };

inline std::string_view to_string(DriftState s) {
  switch (s) {
    case DriftState::Stable: return "stable";
    case DriftState::Warning: return "warning";
    case DriftState::Drift: return "drift";
  }
  return "stable";
}

/// How the cut point is chosen among the candidate prefixes.
///  FirstHit: first candidate (ascending) with A + eps_A <= B + eps_B.
///  LowestUpperBound: scan ascending and move the cut to a longer prefix
///    whenever its upper bound B + eps_B is <= that of the current cut, i.e.
///    the candidate with the smallest upper bound wins (ties go to the longer).
enum class CutRule { FirstHit, LowestUpperBound };

/// Extra requirement on the selected prefix mean B relative to the full mean A.
enum class CutGuard { None, PrefixBelow, PrefixAbove };

/// Quantity compared against the eps_w / eps_d bounds.
///  OverallVsPrefix: |A - B|.   PrefixVsSuffix: |B - C|.
enum class GapStatistic { OverallVsPrefix, PrefixVsSuffix };

struct DriftConfig {
  double alpha_drift = 0.0001;
  double alpha_warning = 0.0005;
  std::vector<double> cut_fractions{0.25, 0.5, 0.75};
  CutRule cut_rule = CutRule::LowestUpperBound;
  CutGuard guard = CutGuard::PrefixBelow;
  GapStatistic statistic = GapStatistic::OverallVsPrefix;
  /// Number of most recent batches whose error vectors are concatenated.
  std::size_t window_batches = 3;

  void validate() const {
    if (!(alpha_drift > 0.0 && alpha_drift < 1.0) || !(alpha_warning > 0.0 && alpha_warning < 1.0)) {
      throw ConfigError("drift significance levels must lie in (0, 1)");
    }
    if (!(alpha_drift < alpha_warning)) throw ConfigError("alpha_drift must be smaller than alpha_warning");
    if (cut_fractions.empty()) throw ConfigError("at least one cut fraction is required");
    for (double f : cut_fractions) {
      if (!(f > 0.0 && f < 1.0)) throw ConfigError("cut fractions must lie strictly in (0, 1)");
    }
    if (window_batches == 0) throw ConfigError("drift window must span at least one batch");
  }
};

struct DriftVerdict {
  DriftState state = DriftState::Stable;
  std::optional<std::size_t> cut;
  double gap = 0.0;
  double eps_warning = 0.0;
  double eps_drift = 0.0;
  std::size_t length = 0;
};

/// Hoeffding half-width sqrt(ln(1/alpha) / (2n)).
inline double hoeffding_epsilon(std::size_t n, double alpha) {
  if (n < 1) throw DomainError("Hoeffding bound needs n >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("Hoeffding significance must lie in (0, 1], got " + std::to_string(alpha));
  }
  return std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(n)));
}

/// Warning/drift bound sqrt((N - cut) / (2 cut N) * ln(1/alpha)).
inline double cut_epsilon(std::size_t n, std::size_t cut, double alpha) {
  const double N = static_cast<double>(n), c = static_cast<double>(cut);
  return std::sqrt((N - c) / (2.0 * c * N) * std::log(1.0 / alpha));
}

namespace detail {
inline double mean_of(std::span<const std::uint8_t> a, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += a[i];
  return s / static_cast<double>(end - begin);
}
}  // namespace detail

inline std::vector<std::size_t> cut_candidates(std::size_t n, const DriftConfig& cfg) {
  std::vector<std::size_t> out;
  for (double f : cfg.cut_fractions) {
    const auto c = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
    if (c >= 1 && c < n) out.push_back(c);
  }
  return out;
}

inline std::optional<std::size_t> find_cut(std::span<const std::uint8_t> a, const DriftConfig& cfg) {
  const std::size_t n = a.size();
  if (n < 4) throw DomainError("cut search needs at least 4 samples, got " + std::to_string(n));
  const double mean_all = detail::mean_of(a, 0, n);
  const double bound_all = mean_all + hoeffding_epsilon(n, cfg.alpha_warning);
  auto upper = [&](std::size_t c) { return detail::mean_of(a, 0, c) + hoeffding_epsilon(c, cfg.alpha_warning); };
  auto guard_ok = [&](std::size_t c) {
    const double b = detail::mean_of(a, 0, c);
    switch (cfg.guard) {
      case CutGuard::None: return true;
      case CutGuard::PrefixBelow: return b < mean_all;
      case CutGuard::PrefixAbove: return b > mean_all;
    }
    return true;
  };

  const auto candidates = cut_candidates(n, cfg);
  if (cfg.cut_rule == CutRule::FirstHit) {
    for (std::size_t c : candidates) {
      if (bound_all <= upper(c) && guard_ok(c)) return c;
    }
    return std::nullopt;
  }
  std::optional<std::size_t> best;
  for (std::size_t c : candidates) {
    if (!best || upper(c) <= upper(*best)) best = c;
  }
  if (best && guard_ok(*best)) return best;
  return std::nullopt;
}

/// Maps a gap at a given cut to a state; monotone in the gap.
inline DriftState classify_gap(double gap, std::size_t n, std::size_t cut, const DriftConfig& cfg) {
  if (gap >= cut_epsilon(n, cut, cfg.alpha_drift)) return DriftState::Drift;
  if (gap >= cut_epsilon(n, cut, cfg.alpha_warning)) return DriftState::Warning;
  return DriftState::Stable;
}

inline DriftVerdict assess(std::span<const std::uint8_t> a, const DriftConfig& cfg) {
  DriftVerdict v;
  v.length = a.size();
  v.cut = find_cut(a, cfg);
  if (!v.cut) return v;
  const std::size_t n = a.size(), c = *v.cut;
  const double b = detail::mean_of(a, 0, c);
  const double rest = detail::mean_of(a, c, n);
  const double all = detail::mean_of(a, 0, n);
  v.gap = cfg.statistic == GapStatistic::OverallVsPrefix ? std::abs(all - b) : std::abs(b - rest);
  v.eps_warning = cut_epsilon(n, c, cfg.alpha_warning);
  v.eps_drift = cut_epsilon(n, c, cfg.alpha_drift);
  v.state = classify_gap(v.gap, n, c, cfg);
  return v;
}

/// Holds the error vectors of the most recent batches and assesses their
/// concatenation. The history restarts after every confirmed drift.
class DriftDetector {
 public:
  DriftDetector() = default;
  explicit DriftDetector(DriftConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const DriftConfig& config() const noexcept { return cfg_; }

  DriftVerdict observe(const AccuracyVector& errors) {
    history_.push_back(errors);
    while (history_.size() > cfg_.window_batches) history_.pop_front();
    AccuracyVector joined;
    for (const auto& h : history_) joined.insert(joined.end(), h.begin(), h.end());
    DriftVerdict v;
    v.length = joined.size();
    if (joined.size() >= 4) v = assess(joined, cfg_);
    if (v.state == DriftState::Drift) history_.clear();
    return v;
  }

  const std::deque<AccuracyVector>& history() const noexcept { return history_; }
  void restore(std::deque<AccuracyVector> history) { history_ = std::move(history); }

 private:
  DriftConfig cfg_;
  std::deque<AccuracyVector> history_;
};

/// Batches collected while the detector sits in the warning state.
template <typename Batch>
class WarningBuffer {
 public:
  /// Warning appends, Stable clears, Drift hands back everything buffered so
  /// far (the replay set) and clears.
  std::vector<Batch> update(DriftState state, const Batch& batch) {
    switch (state) {
      case DriftState::Warning: batches_.push_back(batch); return {};
      case DriftState::Stable: batches_.clear(); return {};
      case DriftState::Drift: {
        std::vector<Batch> out;
        out.swap(batches_);
        return out;
      }
    }
    return {};
  }

  const std::vector<Batch>& batches() const noexcept { return batches_; }
  std::size_t size() const noexcept { return batches_.size(); }
  void restore(std::vector<Batch> batches) { batches_ = std::move(batches); }

 private:
  std::vector<Batch> batches_;
};

}  // namespace nadine

#endif  // NADINE_DRIFT_HPP
