#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace parisian {

// Adaptive Gauss-Kronrod integration over a finite interval.
// Throws when the error estimate fails to meet a loose sanity threshold;
// the formula paths here all integrate piecewise-analytic functions, so a
// failure signals a genuinely bad integrand rather than slow convergence.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-9,
                 unsigned max_depth = 15) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, max_depth, rel_tol, &err);
  if (!std::isfinite(value) ||
      err > std::max(1e-9, 1e-5 * std::abs(value))) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << a << ", " << b
        << "]: value=" << value << " err=" << err;
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace parisian
