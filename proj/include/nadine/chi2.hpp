#ifndef NADINE_CHI2_HPP
#define NADINE_CHI2_HPP

#include <cmath>
#include <limits>
#include <string>

#include "nadine/errors.hpp"

namespace nadine {

namespace detail {

// Series expansion of P(a, x), convergent for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), convergent for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma function P(a, x).
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma shape must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_fraction(a, x);
}

inline double chi2_cdf(double x, double dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

/// Quantile q with P(chi2_dof <= q) = alpha, by bisection on the CDF.
inline double chi2_inverse(std::size_t dof, double alpha) {
  if (dof < 1) throw DomainError("chi-square degrees of freedom must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("chi-square confidence must lie in (0, 1), got " + std::to_string(alpha));
  }
  const double k = static_cast<double>(dof);
  double lo = 0.0;
  double hi = k + 10.0 * std::sqrt(2.0 * k) + 10.0;
  while (chi2_cdf(hi, k) < alpha) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, k) < alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace nadine

#endif  // NADINE_CHI2_HPP
