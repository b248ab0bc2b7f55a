#ifndef NADINE_ACTIVATION_HPP
#define NADINE_ACTIVATION_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nadine/errors.hpp"

namespace nadine {

enum class Activation { ReLU, Sigmoid, Identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

template <typename T>
T activate(Activation a, T x) {
  switch (a) {
    case Activation::ReLU: return x > T{0} ? x : T{0};
    case Activation::Sigmoid: return T{1} / (T{1} + std::exp(-x));
    case Activation::Identity: return x;
  }
  return x;
}

/// Derivative expressed through the pre-activation x and output y.
template <typename T>
T activation_slope(Activation a, T x, T y) {
  switch (a) {
    case Activation::ReLU: return x > T{0} ? T{1} : T{0};
    case Activation::Sigmoid: return y * (T{1} - y);
    case Activation::Identity: return T{1};
  }
  return T{1};
}

}  // namespace nadine

#endif  // NADINE_ACTIVATION_HPP
