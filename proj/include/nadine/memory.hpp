#ifndef NADINE_MEMORY_HPP
#define NADINE_MEMORY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nadine/chi2.hpp"
#include "nadine/errors.hpp"

namespace nadine {

/// Incrementally fitted multivariate Gaussian (center and sample covariance)
/// with a maintained inverse of the ridge-regularized covariance.
///
/// Between full re-inversions the inverse follows the covariance through a
/// scaling plus a Sherman-Morrison rank-1 update, so it tracks
/// (cov + ridge * I)^-1 where `ridge` is scaled along with the covariance.
class GaussianEnvelope {
 public:
  static constexpr double kRidgeFactor = 1e-6;
  static constexpr std::size_t kReinvertEvery = 1000;

  GaussianEnvelope() = default;
  explicit GaussianEnvelope(std::size_t dim)
      : center_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
        scatter_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
        inverse_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

  std::size_t dim() const noexcept { return static_cast<std::size_t>(center_.size()); }
  std::size_t count() const noexcept { return count_; }
  /// Enough samples for a full-rank covariance estimate.
  bool fitted() const noexcept { return dim() > 0 && count_ >= dim() + 1; }

  const Eigen::VectorXd& center() const noexcept { return center_; }
  Eigen::MatrixXd covariance() const {
    if (count_ < 2) return Eigen::MatrixXd::Zero(scatter_.rows(), scatter_.cols());
    return scatter_ / static_cast<double>(count_ - 1);
  }
  const Eigen::MatrixXd& inverse() const noexcept { return inverse_; }
  double ridge() const noexcept { return ridge_; }

  void update(std::span<const double> x) {
    if (x.size() != dim()) {
      throw DimensionError("envelope dimension " + std::to_string(dim()) + " vs sample " + std::to_string(x.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    ++count_;
    const double n = static_cast<double>(count_);
    const Eigen::VectorXd d = v - center_;
    center_ += d / n;
    scatter_.noalias() += ((n - 1.0) / n) * d * d.transpose();

    if (count_ < dim() + 1) return;
    if (count_ == dim() + 1 || count_ - last_inversion_ >= kReinvertEvery) {
      reinvert();
      return;
    }
    // cov_n = c * cov_{n-1} + d d^T / n with c = (n-2)/(n-1)
    const double c = (n - 2.0) / (n - 1.0);
    inverse_ /= c;
    ridge_ *= c;
    const Eigen::VectorXd u = d / std::sqrt(n);
    const Eigen::VectorXd iu = inverse_ * u;
    inverse_.noalias() -= (iu * iu.transpose()) / (1.0 + u.dot(iu));
  }

  /// Squared Mahalanobis distance (x - C)^T Cov^-1 (x - C).
  double mahalanobis2(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd d = v - center_;
    return d.dot(inverse_ * d);
  }

  /// max |(cov + ridge I) * inverse - I|, for consistency checks.
  double inverse_residual() const {
    const Eigen::MatrixXd reg = covariance() + ridge_ * Eigen::MatrixXd::Identity(scatter_.rows(), scatter_.cols());
    return (reg * inverse_ - Eigen::MatrixXd::Identity(scatter_.rows(), scatter_.cols())).cwiseAbs().maxCoeff();
  }

  void reinvert() {
    const Eigen::MatrixXd cov = covariance();
    const double trace = cov.trace();
    ridge_ = kRidgeFactor * (trace > 0.0 ? trace : 1.0) / static_cast<double>(dim());
    const Eigen::MatrixXd reg = cov + ridge_ * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    inverse_ = reg.ldlt().solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
    last_inversion_ = count_;
  }

  /// Raw state access for checkpointing.
  struct State {
    std::vector<double> center, scatter, inverse;
    std::size_t count = 0, last_inversion = 0;
    double ridge = 0.0;
  };
  State state() const {
    State s;
    s.center.assign(center_.data(), center_.data() + center_.size());
    s.scatter.assign(scatter_.data(), scatter_.data() + scatter_.size());
    s.inverse.assign(inverse_.data(), inverse_.data() + inverse_.size());
    s.count = count_;
    s.last_inversion = last_inversion_;
    s.ridge = ridge_;
    return s;
  }
  static GaussianEnvelope from_state(const State& s) {
    GaussianEnvelope env(s.center.size());
    const auto d = static_cast<Eigen::Index>(s.center.size());
    env.center_ = Eigen::Map<const Eigen::VectorXd>(s.center.data(), d);
    env.scatter_ = Eigen::Map<const Eigen::MatrixXd>(s.scatter.data(), d, d);
    env.inverse_ = Eigen::Map<const Eigen::MatrixXd>(s.inverse.data(), d, d);
    env.count_ = s.count;
    env.last_inversion_ = s.last_inversion;
    env.ridge_ = s.ridge;
    return env;
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd scatter_;
  Eigen::MatrixXd inverse_;
  std::size_t count_ = 0;
  std::size_t last_inversion_ = 0;
  double ridge_ = 0.0;
};

/// Lower and upper squared-distance bounds of the edge band.
struct EdgeBand {
  double lower_confidence = 0.99;
  double upper_confidence = 0.999;
};

/// Ellipsoidal edge rule: the squared Mahalanobis distance lies between the
/// chi-square quantiles of the two confidences. Always false while warming.
inline bool edge_test(const GaussianEnvelope& env, std::span<const double> x, const EdgeBand& band = {}) {
  if (!env.fitted()) return false;
  const double m = env.mahalanobis2(x);
  return m >= chi2_inverse(env.dim(), band.lower_confidence) && m <= chi2_inverse(env.dim(), band.upper_confidence);
}

/// Cached variant used on the hot path.
class EdgeThresholds {
 public:
  EdgeThresholds() = default;
  EdgeThresholds(std::size_t dof, const EdgeBand& band)
      : lower_(chi2_inverse(dof, band.lower_confidence)), upper_(chi2_inverse(dof, band.upper_confidence)) {}
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  bool contains(double m) const noexcept { return m >= lower_ && m <= upper_; }

 private:
  double lower_ = 0.0, upper_ = 0.0;
};

/// Hard-sample rule: top-1 share of the top-two probabilities at most `delta`.
inline bool hard_test(std::span<const double> yhat, double delta = 0.55) {
  if (yhat.size() < 2) return false;
  double y1 = -1.0, y2 = -1.0;
  for (double p : yhat) {
    if (p > y1) {
      y2 = y1;
      y1 = p;
    } else if (p > y2) {
      y2 = p;
    }
  }
  const double denom = y1 + y2;
  if (!(denom > 0.0)) return true;
  return y1 / denom <= delta;
}

enum class AdmissionReason { Edge, Hard };

inline std::string_view to_string(AdmissionReason r) { return r == AdmissionReason::Edge ? "edge" : "hard"; }

struct MemoryEntry {
  std::vector<double> features;
  std::size_t label = 0;
  AdmissionReason reason = AdmissionReason::Edge;
  std::size_t batch = 0;
};

/// Bounded FIFO of replay samples.
class MemoryStore {
 public:
  explicit MemoryStore(std::size_t capacity = 500) : capacity_(capacity) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::deque<MemoryEntry>& entries() const noexcept { return entries_; }

  void push(MemoryEntry entry) {
    if (capacity_ == 0) return;
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(std::move(entry));
  }

  std::size_t count(AdmissionReason r) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [r](const MemoryEntry& e) { return e.reason == r; }));
  }

  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<MemoryEntry> entries_;
};

/// Envelope, thresholds and store bundled as one admission policy.
class AdaptiveMemory {
 public:
  AdaptiveMemory() = default;
  AdaptiveMemory(std::size_t dim, std::size_t capacity, double hard_delta = 0.55, EdgeBand band = {})
      : envelope_(dim), thresholds_(dim, band), store_(capacity), hard_delta_(hard_delta) {}

  const GaussianEnvelope& envelope() const noexcept { return envelope_; }
  GaussianEnvelope& envelope() noexcept { return envelope_; }
  const MemoryStore& store() const noexcept { return store_; }
  MemoryStore& store() noexcept { return store_; }
  double hard_delta() const noexcept { return hard_delta_; }

  /// Judges x against the envelope fitted so far, then folds x into it.
  /// Nothing is admitted while the envelope is still warming up.
  bool update_and_admit(std::span<const double> x, std::span<const double> yhat, std::size_t label,
                        std::size_t batch) {
    bool admitted = false;
    if (envelope_.fitted()) {
      AdmissionReason reason{};
      if (thresholds_.contains(envelope_.mahalanobis2(x))) {
        reason = AdmissionReason::Edge;
        admitted = true;
      } else if (hard_test(yhat, hard_delta_)) {
        reason = AdmissionReason::Hard;
        admitted = true;
      }
      if (admitted) store_.push(MemoryEntry{std::vector<double>(x.begin(), x.end()), label, reason, batch});
    }
    envelope_.update(x);
    return admitted;
  }

 private:
  GaussianEnvelope envelope_;
  EdgeThresholds thresholds_;
  MemoryStore store_;
  double hard_delta_ = 0.55;
};

}  // namespace nadine

#endif  // NADINE_MEMORY_HPP
