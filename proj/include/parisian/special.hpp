#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace parisian::special {

inline constexpr double pi = 3.14159265358979323846;

// Regularized lower incomplete gamma P(a,x) = (1/Gamma(a)) int_0^x e^{-t} t^{a-1} dt.
inline double gamma_p(double a, double x) { return boost::math::gamma_p(a, x); }

// Unnormalized lower incomplete gamma, int_0^x e^{-t} t^{a-1} dt.
inline double lower_incomplete_gamma(double a, double x) {
  return boost::math::tgamma_lower(a, x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi);
}

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x), x >= 0.
// Direct evaluation below 2, Lentz continued fraction above.
inline double erfcx(double x) {
  if (x < 0.0) throw std::domain_error("erfcx: negative argument");
  if (x < 2.0) return std::exp(x * x) * std::erfc(x);
  // erfcx(x) = (1/sqrt(pi)) * 1/(x + 1/(2x + 2/(x + 3/(2x + 4/(x + ...)))))
  double f = 0.0;
  for (int n = 60; n >= 1; --n) {
    double denom = (n % 2 == 1) ? 2.0 * x : x;
    f = static_cast<double>(n) / (denom + f);
  }
  return 1.0 / std::sqrt(pi) / (x + f);
}

// Mittag-Leffler function of order 1/2: E_{1/2}(z) = exp(z^2) erfc(-z).
inline double mittag_leffler_half(double z) {
  if (z <= 0.0) return erfcx(-z);
  if (z * z > 700.0) throw std::overflow_error("mittag_leffler_half: argument too large");
  return std::exp(z * z) * std::erfc(-z);
}

}  // namespace parisian::special
