#ifndef NADINE_RANDOM_HPP
#define NADINE_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "nadine/tensor.hpp"

namespace nadine {

/// Seeded engine shared by initializers and generators. The state can be
/// serialized so that a restored checkpoint continues the same sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void restore(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

/// Glorot/Xavier uniform bound sqrt(6 / (fan_in + fan_out)).
inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
void xavier_fill(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = xavier_bound(fan_in, fan_out);
  for (auto& v : t) v = static_cast<T>(rng.uniform(-a, a));
}

}  // namespace nadine

#endif  // NADINE_RANDOM_HPP
