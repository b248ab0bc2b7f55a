#ifndef NADINE_FORGETTING_HPP
#define NADINE_FORGETTING_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nadine/errors.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

/// Per-layer step sizes: one entry per hidden layer followed by the head.
struct LayerRatePlan {
  std::vector<double> rates;
  double extractor = 0.02;
  double floor = 0.001;
  double cap = 0.02;

  static LayerRatePlan uniform(std::size_t hidden_layers, double rate, double floor = 0.001, double cap = 0.02) {
    return LayerRatePlan{std::vector<double>(hidden_layers + 1, rate), rate, floor, cap};
  }
};

/// Pearson correlation of two equally long series; 0 when either is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Mean |Pearson| over every (node, output) pair. Activations are [N, nodes],
/// outputs [N, m], rows aligned by sample.
inline double layer_correlation(const Tensor<double>& activations, const Tensor<double>& outputs) {
  if (activations.rank() != 2 || outputs.rank() != 2 || activations.extent(0) != outputs.extent(0)) {
    throw DimensionError("layer correlation needs aligned [N, nodes] and [N, m] blocks, got " +
                         shape_string(activations.shape()) + " and " + shape_string(outputs.shape()));
  }
  const std::size_t n = activations.extent(0), nodes = activations.extent(1), m = outputs.extent(1);
  if (n < 2) throw DimensionError("layer correlation needs at least two samples");
  std::vector<std::vector<double>> h(nodes, std::vector<double>(n)), y(m, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < nodes; ++j) h[j][r] = activations(r, j);
    for (std::size_t k = 0; k < m; ++k) y[k][r] = outputs(r, k);
  }
  double sum = 0.0;
  for (const auto& hj : h)
    for (const auto& yk : y) sum += std::abs(pearson(hj, yk));
  return sum / static_cast<double>(nodes * m);
}

/// eta = 0.02 * exp(-(1/rho - 1)) before clamping to [floor, cap].
inline double raw_rate(double rho) {
  if (!(rho > 0.0)) return 0.0;
  return 0.02 * std::exp(-(1.0 / rho - 1.0));
}

/// Hidden layers get clamp(raw_rate(rho_l)); the head and the extractor
/// always run at the cap.
inline LayerRatePlan rates_from_correlation(std::span<const double> rhos, double floor = 0.001, double cap = 0.02) {
  LayerRatePlan plan;
  plan.floor = floor;
  plan.cap = cap;
  plan.extractor = cap;
  for (double rho : rhos) plan.rates.push_back(std::clamp(raw_rate(rho), floor, cap));
  plan.rates.push_back(cap);
  return plan;
}

}  // namespace nadine

#endif  // NADINE_FORGETTING_HPP
