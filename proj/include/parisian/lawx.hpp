#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "parisian/model.hpp"
#include "parisian/quadrature.hpp"
#include "parisian/scale.hpp"
#include "parisian/special.hpp"

namespace parisian {

// The positive-part law of X_r: optional atom at c*r (bounded-variation
// models) plus an absolutely continuous density on (0, z_max).
struct PositiveLaw {
  LevyModel model;
  double r = 0.0;
  std::optional<std::pair<double, double>> atom;  // (location, mass)
  std::function<double(double)> density;
  double z_max = 0.0;
  double series_tol = 1e-15;
};

namespace detail {

inline constexpr int kSeriesCap = 400;
inline constexpr int kSeriesMin = 12;

// Density of the compound-Poisson part evaluated through the series in z,
// for the exponential-claims model: valid on 0 < z < c r. The Bessel-type
// series sum_m u^{m+1} y^m / (m!(m+1)!) is summed outward from its peak
// term with the exponential prefactors folded in on a log scale, so large
// eta*r neither overflows the partial sums nor underflows the first term.
inline double clexp_density(const CramerLundbergExp& m, double r, double z) {
  const double cr = m.c * r;
  if (z <= 0.0 || z >= cr) return 0.0;
  const double y = cr - z;
  const double u = m.alpha * m.eta * r;
  const double x = u * y;
  const int peak = static_cast<int>(std::sqrt(std::max(x, 1.0)));
  const double log_peak = (peak + 1.0) * std::log(u) +
                          (peak > 0 ? peak * std::log(y) : 0.0) -
                          std::lgamma(peak + 1.0) - std::lgamma(peak + 2.0);
  double sum = 1.0, term = 1.0;
  for (int mm = peak + 1;; ++mm) {  // ratio decays past the peak
    term *= x / (static_cast<double>(mm) * (mm + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  term = 1.0;
  for (int mm = peak; mm >= 1; --mm) {
    term *= static_cast<double>(mm) * (mm + 1.0) / x;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(log_peak - m.eta * r - m.alpha * y) * sum;
}

// Weights e^{-eta r}(eta r)^k / k! for k = 1..K with K chosen so the
// remaining Poisson tail is below 1e-16.
inline std::vector<double> poisson_weights(double lambda) {
  std::vector<double> w;
  double pk = std::exp(-lambda);  // k = 0
  double tail = 1.0 - pk;
  for (int k = 1; k <= kSeriesCap; ++k) {
    pk *= lambda / k;
    w.push_back(pk);
    tail -= pk;
    if (k >= kSeriesMin && tail < 1e-16) return w;
  }
  throw std::runtime_error("lawx: Poisson weight series failed to converge");
}

// Evaluates the Poisson-weighted convolution series of the phase-type jump
// law, h(y) = sum_{k>=1} e^{-eta r}(eta r)^k/k! f^{*k}(y), exactly through
// the block upper-bidiagonal generator of the k-fold convolutions.
class PhaseTypeJumpSum {
 public:
  PhaseTypeJumpSum(const JumpDiffusionPhaseType& m, double r) {
    const auto w = poisson_weights(m.eta * r);
    const int K = static_cast<int>(w.size());
    const auto mm = m.T_mat.rows();
    const auto n = K * mm;
    Eigen::VectorXd t = m.exit_vector();
    gen_ = Eigen::MatrixXd::Zero(n, n);
    exit_ = Eigen::VectorXd::Zero(n);
    init_ = Eigen::RowVectorXd::Zero(n);
    init_.head(mm) = m.alpha_vec.transpose();
    for (int k = 0; k < K; ++k) {
      gen_.block(k * mm, k * mm, mm, mm) = m.T_mat;
      if (k + 1 < K) gen_.block(k * mm, (k + 1) * mm, mm, mm) = t * m.alpha_vec.transpose();
      exit_.segment(k * mm, mm) = w[static_cast<size_t>(k)] * t;
    }
    // Exponential tail rate of the phase-type law, for cutoff selection.
    tail_rate_ = -m.T_mat.eigenvalues().real().maxCoeff();
  }

  double operator()(double y) const {
    if (y <= 0.0) return 0.0;
    return init_ * (gen_ * y).exp() * exit_;
  }
  double tail_rate() const { return tail_rate_; }

 private:
  Eigen::MatrixXd gen_;
  Eigen::RowVectorXd init_;
  Eigen::VectorXd exit_;
  double tail_rate_ = 1.0;
};

}  // namespace detail

inline PositiveLaw build_law(const LevyModel& model, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("build_law: r must be positive");
  if (std::holds_alternative<StableThreeHalves>(model))
    throw std::domain_error("build_law: stable model law is unsupported");
  validate(model);
  PositiveLaw law;
  law.model = model;
  law.r = r;

  if (const auto* m = std::get_if<CramerLundbergExp>(&model)) {
    const double cr = m->c * r;
    law.atom = {{cr, std::exp(-m->eta * r)}};
    law.z_max = cr;
    law.density = [mm = *m, r](double z) {
      return detail::clexp_density(mm, r, z);
    };
    return law;
  }
  if (const auto* m = std::get_if<BrownianRisk>(&model)) {
    const double mu = m->c * r, sd = m->sigma * std::sqrt(r);
    law.z_max = std::max(mu, 0.0) + 12.0 * sd;
    law.density = [mu, sd](double z) {
      return z > 0.0 ? special::normal_pdf((z - mu) / sd) / sd : 0.0;
    };
    return law;
  }
  const auto& m = std::get<JumpDiffusionPhaseType>(model);
  auto jumps = std::make_shared<detail::PhaseTypeJumpSum>(m, r);
  const double cr = m.c * r;
  if (m.sigma == 0.0) {
    law.atom = {{cr, std::exp(-m.eta * r)}};
    law.z_max = cr;
    law.density = [jumps, cr](double z) {
      return (z > 0.0 && z < cr) ? (*jumps)(cr - z) : 0.0;
    };
    return law;
  }
  // sigma > 0: convolve the jump-sum density with the Gaussian part. The
  // jump sum (analytic in y) is tabulated once on a uniform grid; each
  // density call then runs composite Simpson over the grid nodes under the
  // Gaussian window instead of a matrix exponential per quadrature node.
  const double mean_jump = m.eta * r * (-m.alpha_vec.transpose() *
                                        m.T_mat.inverse()).sum();
  double y_max = mean_jump + 60.0 / jumps->tail_rate() + 5.0;
  while ((*jumps)(y_max) > 1e-15) y_max *= 1.5;
  const int n_tab = 4097;
  auto table = std::make_shared<std::vector<double>>(n_tab);
  const double dy = y_max / (n_tab - 1);
  for (int i = 0; i < n_tab; ++i) (*table)[i] = (*jumps)(i * dy);
  const double sd = m.sigma * std::sqrt(r);
  const double w0 = std::exp(-m.eta * r);
  law.z_max = std::max(cr, 0.0) + 12.0 * sd;
  law.density = [table, cr, sd, w0, dy, n_tab](double z) {
    if (z <= 0.0) return 0.0;
    const double gauss = w0 * special::normal_pdf((z - cr) / sd) / sd;
    int i_lo = std::max(
        0, static_cast<int>(std::floor((cr - z - 12.0 * sd) / dy)));
    int i_hi = std::min(
        n_tab - 1, static_cast<int>(std::ceil((cr - z + 12.0 * sd) / dy)));
    if (i_hi <= i_lo + 1) return gauss;
    if ((i_hi - i_lo) % 2 == 1) --i_hi;  // Simpson needs an even panel count
    double conv = 0.0;
    for (int i = i_lo; i <= i_hi; ++i) {
      const double w =
          (i == i_lo || i == i_hi) ? 1.0 : ((i - i_lo) % 2 ? 4.0 : 2.0);
      conv += w * (*table)[i] * special::normal_pdf((z - cr + i * dy) / sd);
    }
    return gauss + conv * dy / (3.0 * sd);
  };
  return law;
}

// integral of f(z) z P(X_r in dz) over (0, infinity): atom plus quadrature.
// Interior discontinuities of f (e.g. the jump of a bounded-variation scale
// function) can be passed as breakpoints; the quadrature is split there.
inline double weighted_integral(const PositiveLaw& law,
                                const std::function<double(double)>& f,
                                std::vector<double> breaks = {}) {
  double total = 0.0;
  if (law.atom) total += law.atom->second * law.atom->first * f(law.atom->first);
  if (law.z_max > 0.0) {
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                                [&](double b) {
                                  return !(b > 0.0) || !(b < law.z_max);
                                }),
                 breaks.end());
    breaks.push_back(0.0);
    breaks.push_back(law.z_max);
    std::sort(breaks.begin(), breaks.end());
    for (size_t i = 0; i + 1 < breaks.size(); ++i)
      total += integrate([&](double z) { return f(z) * z * law.density(z); },
                         breaks[i], breaks[i + 1]);
  }
  return total;
}

inline double first_moment(const PositiveLaw& law) {
  if (const auto* m = std::get_if<CramerLundbergExp>(&law.model)) {
    const double r = law.r, cr = m->c * r, u = m->eta * r;
    double term = u;  // (eta r)^{m+1} / (m!(m+1)!) at m = 0
    double sum = 0.0;
    for (int mm = 0; mm <= detail::kSeriesCap; ++mm) {
      double g1 = special::lower_incomplete_gamma(mm + 1.0, cr * m->alpha);
      double g2 = special::lower_incomplete_gamma(mm + 2.0, cr * m->alpha);
      double contrib = term * (cr * g1 - g2 / m->alpha);
      sum += contrib;
      if (mm >= detail::kSeriesMin && std::abs(contrib) < 1e-15 * std::abs(sum + cr))
        return std::exp(-m->eta * r) * (cr + sum);
      term *= u / ((mm + 1.0) * (mm + 2.0));
    }
    throw std::runtime_error("lawx: first-moment series failed to converge");
  }
  if (const auto* m = std::get_if<BrownianRisk>(&law.model)) {
    const double r = law.r, sd = m->sigma * std::sqrt(r);
    return sd / std::sqrt(2.0 * special::pi) *
               std::exp(-m->c * m->c * r / (2.0 * m->sigma * m->sigma)) +
           m->c * r * special::normal_cdf(m->c * std::sqrt(r) / m->sigma);
  }
  return weighted_integral(law, [](double) { return 1.0; });
}

// |int W^{(q)}(z) (z/r) P(X_r in dz) - e^{qr}| / e^{qr}; Lemma 5.1 audit.
inline double exp_kernel_identity_check(const PositiveLaw& law, double q) {
  RefractedModel rm{law.model, 0.0};
  ScaleContext ctx(rm, q);
  double lhs =
      weighted_integral(law, [&](double z) { return ctx.W(z); }) / law.r;
  double ref = std::exp(q * law.r);
  return std::abs(lhs - ref) / ref;
}

}  // namespace parisian
