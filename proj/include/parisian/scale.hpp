#pragma once

#include <algorithm>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "parisian/model.hpp"
#include "parisian/quadrature.hpp"
#include "parisian/special.hpp"

namespace parisian {

namespace detail {

// Polynomial with ascending coefficients.
using Poly = std::vector<double>;

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline void poly_add_inplace(Poly& a, const Poly& b, double scale = 1.0) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (size_t i = 0; i < b.size(); ++i) a[i] += scale * b[i];
}

inline Poly poly_derivative(const Poly& a) {
  if (a.size() <= 1) return {0.0};
  Poly out(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i) out[i - 1] = a[i] * static_cast<double>(i);
  return out;
}

inline std::complex<double> poly_eval(const Poly& a, std::complex<double> x) {
  std::complex<double> v = 0.0;
  for (size_t i = a.size(); i-- > 0;) v = v * x + a[i];
  return v;
}

inline std::vector<std::complex<double>> poly_roots(const Poly& coeffs) {
  Poly c = coeffs;
  while (c.size() > 1 && std::abs(c.back()) == 0.0) c.pop_back();
  const size_t deg = c.size() - 1;
  if (deg == 0) return {};
  if (deg == 1) return {{-c[0] / c[1], 0.0}};
  if (deg == 2) {
    std::complex<double> a = c[2], b = c[1], d = c[0];
    std::complex<double> disc = std::sqrt(b * b - 4.0 * a * d);
    // Numerically stable quadratic roots.
    std::complex<double> qq = -0.5 * (b + (b.real() >= 0.0 ? disc : -disc));
    return {qq / a, d / qq};
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (size_t i = 0; i < deg; ++i) comp(0, i) = -c[deg - 1 - i] / c[deg];
  for (size_t i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    roots.push_back(es.eigenvalues()[i]);
  return roots;
}

// Characteristic polynomial det(lambda I - T) and the adjugate expansion
// adj(lambda I - T) = sum_k lambda^{m-k} M_k via Faddeev-LeVerrier;
// returns (char poly ascending, numerator poly of alpha adj(.) t ascending).
inline std::pair<Poly, Poly> phase_type_fraction(const JumpDiffusionPhaseType& m) {
  const auto n = m.T_mat.rows();
  Eigen::VectorXd t = m.exit_vector();
  Poly d(n + 1, 0.0);
  d[n] = 1.0;
  Poly p(n, 0.0);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  double ck = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    if (k > 1) M = m.T_mat * M + ck * Eigen::MatrixXd::Identity(n, n);
    ck = -(m.T_mat * M).trace() / static_cast<double>(k);
    d[n - k] = ck;
    p[n - k] = m.alpha_vec.dot(M * t);
  }
  return {d, p};
}

// psi(lambda) - q as a ratio N(lambda)/D(lambda) of polynomials, for the
// rational-exponent models with effective drift c_eff.
struct RationalExponent {
  Poly num;
  Poly den;
};

inline RationalExponent rational_exponent(const LevyModel& model, double q) {
  struct V {
    double q;
    RationalExponent operator()(const CramerLundbergExp& m) const {
      // (c l + eta(alpha/(l+alpha) - 1) - q)(l + alpha)
      return {{-q * m.alpha, m.c * m.alpha - m.eta - q, m.c}, {m.alpha, 1.0}};
    }
    RationalExponent operator()(const BrownianRisk& m) const {
      return {{-q, m.c, 0.5 * m.sigma * m.sigma}, {1.0}};
    }
    RationalExponent operator()(const JumpDiffusionPhaseType& m) const {
      auto [d, p] = phase_type_fraction(m);
      Poly lin = {-m.eta - q, m.c, 0.5 * m.sigma * m.sigma};
      while (lin.size() > 1 && lin.back() == 0.0) lin.pop_back();
      Poly num = poly_mul(lin, d);
      poly_add_inplace(num, p, m.eta);
      return {num, d};
    }
    RationalExponent operator()(const StableThreeHalves&) const {
      throw std::domain_error("stable model has no rational Laplace exponent");
    }
  };
  return std::visit(V{q}, model);
}

// Exponential-sum representation W^{(q)}(x) = Re sum_k a_k e^{theta_k x}
// over all (distinct) roots of psi(lambda) = q, with a_k = D(theta)/N'(theta).
struct ExpSum {
  std::vector<std::complex<double>> theta;
  std::vector<std::complex<double>> coef;
  double q = 0.0;

  double W(double x) const {
    if (x < 0.0) return 0.0;
    std::complex<double> s = 0.0;
    for (size_t k = 0; k < theta.size(); ++k) s += coef[k] * std::exp(theta[k] * x);
    return s.real();
  }
  double Wp(double x) const {
    std::complex<double> s = 0.0;
    for (size_t k = 0; k < theta.size(); ++k)
      s += coef[k] * theta[k] * std::exp(theta[k] * x);
    return s.real();
  }
  // Z^{(q)}(x) = 1 + q int_0^x W^{(q)}.
  double Z(double x) const {
    if (x <= 0.0) return 1.0;
    std::complex<double> s = 0.0;
    for (size_t k = 0; k < theta.size(); ++k) {
      if (std::abs(theta[k]) < 1e-14)
        s += coef[k] * x;
      else
        s += coef[k] * (std::exp(theta[k] * x) - 1.0) / theta[k];
    }
    return 1.0 + q * s.real();
  }
};

inline ExpSum build_exp_sum(const LevyModel& model, double q) {
  RationalExponent re = rational_exponent(model, q);
  Poly dnum = poly_derivative(re.num);
  auto roots = poly_roots(re.num);
  // Polish with two Newton steps.
  for (auto& r : roots) {
    for (int it = 0; it < 3; ++it) {
      auto f = poly_eval(re.num, r);
      auto d = poly_eval(dnum, r);
      if (std::abs(d) == 0.0) break;
      r -= f / d;
    }
  }
  for (size_t i = 0; i < roots.size(); ++i)
    for (size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) < 1e-8)
        throw std::runtime_error("scale: near-multiple roots of the Laplace exponent");
  ExpSum es;
  es.q = q;
  for (const auto& r : roots) {
    auto np = poly_eval(dnum, r);
    auto dv = poly_eval(re.den, r);
    if (std::abs(np / dv) < 1e-10)
      throw std::runtime_error("scale: |psi'(root)| too small, near-multiple roots");
    es.theta.push_back(r);
    es.coef.push_back(dv / np);
  }
  // The representation must be real: probe a few points.
  for (double x : {0.5, 1.0, 5.0, 10.0}) {
    std::complex<double> s = 0.0;
    for (size_t k = 0; k < es.theta.size(); ++k)
      s += es.coef[k] * std::exp(es.theta[k] * x);
    if (std::abs(s.imag()) > 1e-10 * std::max(1.0, std::abs(s.real())))
      throw std::runtime_error("scale: partial-fraction sum has non-real residue");
  }
  return es;
}

}  // namespace detail

// Precomputed root systems for one (refracted model, q) pair. Immutable.
class ScaleContext {
 public:
  ScaleContext(RefractedModel rm, double q) : rm_(std::move(rm)), q_(q) {
    if (!(q >= 0.0)) throw std::domain_error("ScaleContext: q must be >= 0");
    stable_ = std::holds_alternative<StableThreeHalves>(rm_.x_model);
    if (stable_) {
      if (q != 0.0)
        throw std::domain_error("ScaleContext: stable model supports q = 0 only");
      phi_q_ = phi_inverse(rm_.x_model, q);
      varphi_q_ = varphi_inverse(rm_, q);
      return;
    }
    x_rep_ = detail::build_exp_sum(rm_.x_model, q);
    y_rep_ = detail::build_exp_sum(rm_.y_model(), q);
    phi_q_ = phi_inverse(rm_.x_model, q);
    varphi_q_ = varphi_inverse(rm_, q);
  }

  const RefractedModel& model() const { return rm_; }
  double q() const { return q_; }
  double phi_q() const { return phi_q_; }
  double varphi_q() const { return varphi_q_; }
  bool is_stable() const { return stable_; }

  // W^{(q)} of X.
  double W(double x) const {
    if (x < 0.0) return 0.0;
    if (stable_) return stable_w(drift_c(rm_.x_model), x);
    return x_rep_.W(x);
  }
  double Wp(double x) const {
    if (stable_) return stable_wp(drift_c(rm_.x_model), x);
    return x_rep_.Wp(x);
  }
  double Z(double x) const {
    if (stable_) return 1.0;  // q = 0
    return x_rep_.Z(x);
  }
  // Scale functions of Y (drift c - delta).
  double Wy(double x) const {
    if (x < 0.0) return 0.0;
    if (stable_) return stable_w(drift_c(rm_.x_model) - rm_.delta, x);
    return y_rep_.W(x);
  }
  double Wyp(double x) const {
    if (stable_) return stable_wp(drift_c(rm_.x_model) - rm_.delta, x);
    return y_rep_.Wp(x);
  }
  double Zy(double x) const {
    if (stable_) return 1.0;
    return y_rep_.Z(x);
  }

  // Refracted kernel w^{(q)}(x; z) of Kyprianou-Loeffen.
  double refracted_w(double x, double z) const {
    if (x < 0.0) return W(x - z);
    if (rm_.delta == 0.0) return W(x - z);
    if (stable_) {
      // W(x-z) + delta int_0^x Wy(x-y) W'(y-z) dy; the integrand is
      // integrable at y -> z+ (one-sided 1/sqrt singularity when z >= 0).
      double conv = integrate(
          [&](double y) { return y > z ? Wy(x - y) * Wp(y - z) : 0.0; },
          std::max(0.0, z), x, 1e-8);
      return W(x - z) + rm_.delta * conv;
    }
    std::complex<double> s = 0.0;
    for (size_t j = 0; j < x_rep_.theta.size(); ++j) {
      const auto tj = x_rep_.theta[j];
      const auto aj = x_rep_.coef[j] * tj * std::exp(-tj * z);
      if (std::abs(aj) == 0.0) continue;
      for (size_t i = 0; i < y_rep_.theta.size(); ++i) {
        const auto zi = y_rep_.theta[i];
        std::complex<double> frac;
        if (std::abs(tj - zi) < 1e-12)
          frac = x * std::exp(tj * x);
        else
          frac = (std::exp(tj * x) - std::exp(zi * x)) / (tj - zi);
        s += y_rep_.coef[i] * aj * frac;
      }
    }
    return W(x - z) + rm_.delta * s.real();
  }

 private:
  static double stable_w(double drift, double x) {
    if (!(drift > 0.0))
      throw std::domain_error("stable scale function needs positive drift");
    return (1.0 - special::mittag_leffler_half(-drift * std::sqrt(x))) / drift;
  }
  static double stable_wp(double drift, double x) {
    if (!(x > 0.0)) throw std::domain_error("stable W' needs x > 0");
    return 1.0 / std::sqrt(special::pi * x) -
           drift * special::mittag_leffler_half(-drift * std::sqrt(x));
  }

  RefractedModel rm_;
  double q_;
  bool stable_ = false;
  double phi_q_ = 0.0;
  double varphi_q_ = 0.0;
  detail::ExpSum x_rep_, y_rep_;
};

// Caches ScaleContexts per q for one refracted model.
class ScaleFamily {
 public:
  explicit ScaleFamily(RefractedModel rm) : rm_(std::move(rm)) {}

  const ScaleContext& at(double q) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(q);
    if (it == cache_.end())
      it = cache_.emplace(q, std::make_shared<ScaleContext>(rm_, q)).first;
    return *it->second;
  }
  const RefractedModel& model() const { return rm_; }

 private:
  RefractedModel rm_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const ScaleContext>> cache_;
};

// Free-function spellings of the context evaluators.
inline double scale_w(const ScaleContext& ctx, double x) { return ctx.W(x); }
inline double scale_z(const ScaleContext& ctx, double x) { return ctx.Z(x); }
inline double scale_w_y(const ScaleContext& ctx, double x) { return ctx.Wy(x); }
inline double scale_z_y(const ScaleContext& ctx, double x) { return ctx.Zy(x); }
inline double refracted_w(const ScaleContext& ctx, double x, double z) {
  return ctx.refracted_w(x, z);
}

// Composite kernels from the exit identities. The (p, q) pair shifts the
// inner scale index to p + q; p >= 0 and p + q >= 0 are required.
namespace kernels {

inline void check_indices(double p, double q) {
  if (!(p >= 0.0) || !(p + q >= 0.0))
    throw std::domain_error("kernel: requires p >= 0 and p + q >= 0");
}

// W_a^{(p,q)}(x), evaluated through the form with the integral over [0, a].
inline double kernel_W(const ScaleFamily& fam, double p, double q, double a,
                       double x) {
  check_indices(p, q);
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  if (q == 0.0 || a <= 0.0) return cpq.W(x);
  double corr = integrate(
      [&](double y) { return cpq.W(x - y) * cp.W(y); }, 0.0, std::min(a, x));
  return cpq.W(x) - q * corr;
}

// Same kernel through the other algebraic form (integral over [a, x]);
// used by the identity audits.
inline double kernel_W_alt(const ScaleFamily& fam, double p, double q, double a,
                           double x) {
  check_indices(p, q);
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  const double lo = std::max(a, 0.0);
  if (q == 0.0 || x <= lo) return cp.W(x);
  double corr = integrate(
      [&](double y) { return cpq.W(x - y) * cp.W(y); }, lo, x);
  return cp.W(x) + q * corr;
}

// H^{(p,q)}(x) = e^{Phi(p)x}(1 + q int_0^x e^{-Phi(p)y} W^{(p+q)}(y) dy).
inline double kernel_H(const ScaleFamily& fam, double p, double q, double x) {
  check_indices(p, q);
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  double phi = cp.phi_q();
  double integral =
      x > 0.0 ? integrate([&](double y) { return std::exp(-phi * y) * cpq.W(y); },
                          0.0, x)
              : 0.0;
  return std::exp(phi * x) * (1.0 + q * integral);
}

// W_{a,delta}^{(p,q)}(x), evaluated through the form with W^{(p+q)} and the
// integral over [0, a].
inline double kernel_W_delta_alt(const ScaleFamily& fam, double p, double q,
                                 double a, double x);

inline double kernel_W_delta(const ScaleFamily& fam, double p, double q,
                             double a, double x) {
  check_indices(p, q);
  const double delta = fam.model().delta;
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  if (a <= 0.0) return cpq.W(x);
  // For x < a the integrand's derivative term carries a point mass at
  // y = x when W(0) > 0; fall back to the other algebraic form there.
  if (x < a) return kernel_W_delta_alt(fam, p, q, a, x);
  double corr = integrate(
      [&](double y) {
        return (q * cpq.W(x - y) - delta * cpq.Wp(x - y)) * cp.Wy(y);
      },
      0.0, a);
  return cpq.W(x) - corr;
}

inline double kernel_W_delta_alt(const ScaleFamily& fam, double p, double q,
                                 double a, double x) {
  check_indices(p, q);
  const double delta = fam.model().delta;
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  double head = cp.Wy(x) * (1.0 - delta * cpq.W(0.0));
  if (x <= std::max(a, 0.0)) return head;
  double corr = integrate(
      [&](double y) {
        return (q * cpq.W(x - y) - delta * cpq.Wp(x - y)) * cp.Wy(y);
      },
      std::max(a, 0.0), x);
  return head + corr;
}

// H_delta^{(p,q)}(x) = e^{varphi(p)x}(1 + (q - delta varphi(p))
//                       int_0^x e^{-varphi(p)y} W^{(p+q)}(y) dy).
inline double kernel_H_delta(const ScaleFamily& fam, double p, double q,
                             double x) {
  check_indices(p, q);
  const double delta = fam.model().delta;
  const auto& cp = fam.at(p);
  const auto& cpq = fam.at(p + q);
  double vphi = cp.varphi_q();
  double integral =
      x > 0.0 ? integrate([&](double y) { return std::exp(-vphi * y) * cpq.W(y); },
                          0.0, x)
              : 0.0;
  return std::exp(vphi * x) * (1.0 + (q - delta * vphi) * integral);
}

}  // namespace kernels

}  // namespace parisian
