#ifndef NADINE_BATCH_HPP
#define NADINE_BATCH_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nadine/errors.hpp"
#include "nadine/tensor.hpp"

namespace nadine {

/// One labelled batch B_k. Sensors are [N, u * window]; images, when present,
/// hold one [C, H, W] tensor per row.
struct StreamBatch {
  std::size_t index = 0;
  Tensor<double> sensors;
  std::optional<std::vector<Tensor<double>>> images;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool has_sensors() const noexcept { return sensors.rank() == 2; }

  Tensor<double> sensor_row(std::size_t i) const {
    const std::size_t u = sensors.extent(1);
    std::vector<double> row(sensors.values().begin() + static_cast<std::ptrdiff_t>(i * u),
                            sensors.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * u));
    return Tensor<double>({u}, std::move(row));
  }

  void validate(std::size_t classes) const {
    const std::size_t n = labels.size();
    if (n == 0) throw InputError("batch " + std::to_string(index) + " is empty");
    if (has_sensors() && sensors.extent(0) != n) {
      throw DimensionError("batch " + std::to_string(index) + " has " + std::to_string(sensors.extent(0)) +
                           " sensor rows for " + std::to_string(n) + " labels");
    }
    if (images && images->size() != n) {
      throw DimensionError("batch " + std::to_string(index) + " has " + std::to_string(images->size()) +
                           " images for " + std::to_string(n) + " labels");
    }
    for (std::size_t y : labels) {
      if (y >= classes) throw SchemaError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
};

}  // namespace nadine

#endif  // NADINE_BATCH_HPP
