#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Dense>

namespace parisian {

// Cramer-Lundberg surplus with exponential claims: X_t = c t - sum C_i,
// Poisson(eta) arrivals, claims Exp(alpha).
struct CramerLundbergExp {
  double c;
  double eta;
  double alpha;
};

// Brownian surplus: X_t = c t + sigma B_t.
struct BrownianRisk {
  double c;
  double sigma;
};

// Jump-diffusion with phase-type claims: X_t = c t + sigma B_t - sum C_i,
// C ~ PH(alpha_vec, T_mat) of order m.
struct JumpDiffusionPhaseType {
  double c;
  double sigma;
  double eta;
  Eigen::VectorXd alpha_vec;
  Eigen::MatrixXd T_mat;

  Eigen::VectorXd exit_vector() const {
    return -T_mat * Eigen::VectorXd::Ones(T_mat.rows());
  }
};

// Spectrally negative 3/2-stable surplus: X_t = c t + Z_t.
struct StableThreeHalves {
  double c;
};

using LevyModel = std::variant<CramerLundbergExp, BrownianRisk,
                               JumpDiffusionPhaseType, StableThreeHalves>;

inline void validate(const LevyModel& model) {
  struct V {
    void operator()(const CramerLundbergExp& m) const {
      if (!(m.c > 0.0)) throw std::invalid_argument("CramerLundbergExp: c must be > 0");
      if (!(m.eta > 0.0)) throw std::invalid_argument("CramerLundbergExp: eta must be > 0");
      if (!(m.alpha > 0.0)) throw std::invalid_argument("CramerLundbergExp: alpha must be > 0");
    }
    void operator()(const BrownianRisk& m) const {
      if (!(m.sigma > 0.0)) throw std::invalid_argument("BrownianRisk: sigma must be > 0");
      if (!std::isfinite(m.c)) throw std::invalid_argument("BrownianRisk: c must be finite");
    }
    void operator()(const JumpDiffusionPhaseType& m) const {
      if (!(m.eta > 0.0)) throw std::invalid_argument("JumpDiffusionPhaseType: eta must be > 0");
      if (m.sigma < 0.0) throw std::invalid_argument("JumpDiffusionPhaseType: sigma must be >= 0");
      const auto n = m.T_mat.rows();
      if (n == 0 || m.T_mat.cols() != n || m.alpha_vec.size() != n)
        throw std::invalid_argument("JumpDiffusionPhaseType: dimension mismatch");
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (m.alpha_vec[i] < 0.0)
          throw std::invalid_argument("JumpDiffusionPhaseType: alpha_vec entries must be >= 0");
        sum += m.alpha_vec[i];
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("JumpDiffusionPhaseType: alpha_vec must sum to 1");
      for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          double v = m.T_mat(i, j);
          if (i == j && v > 0.0)
            throw std::invalid_argument("JumpDiffusionPhaseType: diagonal of T must be <= 0");
          if (i != j && v < 0.0)
            throw std::invalid_argument("JumpDiffusionPhaseType: off-diagonal of T must be >= 0");
          row += v;
        }
        if (row > 1e-12)
          throw std::invalid_argument("JumpDiffusionPhaseType: row sums of T must be <= 0");
      }
      if (!(m.c > 0.0) && m.sigma == 0.0)
        throw std::invalid_argument("JumpDiffusionPhaseType: c must be > 0 when sigma = 0");
    }
    void operator()(const StableThreeHalves& m) const {
      if (!(m.c > 0.0)) throw std::invalid_argument("StableThreeHalves: c must be > 0");
    }
  };
  std::visit(V{}, model);
}

// Paths of bounded variation: compound Poisson drift models without a
// Gaussian part.
inline bool has_bounded_variation(const LevyModel& model) {
  struct V {
    bool operator()(const CramerLundbergExp&) const { return true; }
    bool operator()(const BrownianRisk&) const { return false; }
    bool operator()(const JumpDiffusionPhaseType& m) const { return m.sigma == 0.0; }
    bool operator()(const StableThreeHalves&) const { return false; }
  };
  return std::visit(V{}, model);
}

inline double drift_c(const LevyModel& model) {
  struct V {
    double operator()(const CramerLundbergExp& m) const { return m.c; }
    double operator()(const BrownianRisk& m) const { return m.c; }
    double operator()(const JumpDiffusionPhaseType& m) const { return m.c; }
    double operator()(const StableThreeHalves& m) const { return m.c; }
  };
  return std::visit(V{}, model);
}

// Same jump/Gaussian structure, drift reduced by delta. This is the process
// Y when applied to X.
inline LevyModel with_drift_reduced(const LevyModel& model, double delta) {
  LevyModel out = model;
  std::visit([delta](auto& m) { m.c -= delta; }, out);
  return out;
}

// Laplace exponent psi(lambda), lambda >= 0.
inline double laplace_exponent(const LevyModel& model, double lambda) {
  if (!std::isfinite(lambda)) throw std::domain_error("laplace_exponent: non-finite lambda");
  struct V {
    double lambda;
    double operator()(const CramerLundbergExp& m) const {
      return m.c * lambda + m.eta * (m.alpha / (lambda + m.alpha) - 1.0);
    }
    double operator()(const BrownianRisk& m) const {
      return m.c * lambda + 0.5 * m.sigma * m.sigma * lambda * lambda;
    }
    double operator()(const JumpDiffusionPhaseType& m) const {
      const auto n = m.T_mat.rows();
      Eigen::MatrixXd A = lambda * Eigen::MatrixXd::Identity(n, n) - m.T_mat;
      Eigen::VectorXd sol = A.partialPivLu().solve(m.exit_vector());
      return m.c * lambda + 0.5 * m.sigma * m.sigma * lambda * lambda +
             m.eta * (m.alpha_vec.dot(sol) - 1.0);
    }
    double operator()(const StableThreeHalves& m) const {
      return m.c * lambda + std::pow(lambda, 1.5);
    }
  };
  return std::visit(V{lambda}, model);
}

inline double laplace_exponent_derivative(const LevyModel& model, double lambda) {
  struct V {
    double lambda;
    double operator()(const CramerLundbergExp& m) const {
      double d = lambda + m.alpha;
      return m.c - m.eta * m.alpha / (d * d);
    }
    double operator()(const BrownianRisk& m) const {
      return m.c + m.sigma * m.sigma * lambda;
    }
    double operator()(const JumpDiffusionPhaseType& m) const {
      const auto n = m.T_mat.rows();
      Eigen::MatrixXd A = lambda * Eigen::MatrixXd::Identity(n, n) - m.T_mat;
      auto lu = A.partialPivLu();
      Eigen::VectorXd sol = lu.solve(m.exit_vector());
      Eigen::VectorXd sol2 = lu.solve(sol);
      return m.c + m.sigma * m.sigma * lambda - m.eta * m.alpha_vec.dot(sol2);
    }
    double operator()(const StableThreeHalves& m) const {
      return m.c + 1.5 * std::sqrt(lambda);
    }
  };
  return std::visit(V{lambda}, model);
}

// E[X_1] = psi'(0+).
inline double mean_at_one(const LevyModel& model) {
  struct V {
    double operator()(const CramerLundbergExp& m) const { return m.c - m.eta / m.alpha; }
    double operator()(const BrownianRisk& m) const { return m.c; }
    double operator()(const JumpDiffusionPhaseType& m) const {
      // E[C_1] = -alpha T^{-1} 1
      Eigen::VectorXd sol =
          m.T_mat.partialPivLu().solve(Eigen::VectorXd::Ones(m.T_mat.rows()));
      double mean_claim = -m.alpha_vec.dot(sol);
      if (!std::isfinite(mean_claim))
        throw std::runtime_error("mean_at_one: singular phase-type generator");
      return m.c - m.eta * mean_claim;
    }
    // The 3/2-stable term has vanishing derivative at 0+.
    double operator()(const StableThreeHalves& m) const { return m.c; }
  };
  return std::visit(V{}, model);
}

// Right-inverse Phi(q) = sup{lambda >= 0 : psi(lambda) = q}. Bracket the
// largest root beyond the convexity minimum, then safeguarded Newton.
inline double phi_inverse(const LevyModel& model, double q) {
  if (!(q >= 0.0) || !std::isfinite(q)) throw std::domain_error("phi_inverse: q must be >= 0");
  auto psi = [&](double l) { return laplace_exponent(model, l); };
  auto dpsi = [&](double l) { return laplace_exponent_derivative(model, l); };

  // Locate the minimum of psi (psi is strictly convex).
  double lo = 0.0;
  if (dpsi(0.0) < 0.0) {
    double hi = 1.0;
    while (dpsi(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e12) throw std::runtime_error("phi_inverse: cannot bracket psi minimum");
    }
    double a = 0.0, b = hi;
    for (int i = 0; i < 200 && (b - a) > 1e-16 * std::max(1.0, b); ++i) {
      double mid = 0.5 * (a + b);
      (dpsi(mid) < 0.0 ? a : b) = mid;
    }
    lo = b;
  }
  if (psi(lo) >= q) {
    // Largest root is at or below the minimum; only possible when q == psi(lo),
    // in particular q=0 with psi'(0+) >= 0 gives Phi(0)=0.
    if (q == 0.0 && dpsi(0.0) >= 0.0) return 0.0;
  }
  double hi = std::max(2.0 * lo, 1.0);
  while (psi(hi) < q) {
    hi *= 2.0;
    if (hi > 1e14) throw std::runtime_error("phi_inverse: cannot bracket root of psi = q");
  }
  // Safeguarded Newton on [lo, hi].
  double x = hi;
  for (int i = 0; i < 200; ++i) {
    double f = psi(x) - q;
    if (std::abs(f) <= 1e-13 * std::max(1.0, q)) break;
    double d = dpsi(x);
    double step = (d > 0.0) ? f / d : 0.0;
    double next = x - step;
    if (!(next > lo) || !(next < hi) || step == 0.0) next = 0.5 * (lo + hi);
    (psi(next) - q < 0.0 ? lo : hi) = next;
    x = next;
  }
  if (std::abs(psi(x) - q) > 1e-12 * std::max(1.0, q))
    throw std::runtime_error("phi_inverse: Newton failed to converge, q=" + std::to_string(q));
  return x;
}

// Refracted surplus: drift c - delta above 0, c below 0.
struct RefractedModel {
  LevyModel x_model;
  double delta = 0.0;

  RefractedModel(LevyModel m, double d) : x_model(std::move(m)), delta(d) {
    validate(x_model);
    if (!(delta >= 0.0)) throw std::invalid_argument("RefractedModel: delta must be >= 0");
    if (has_bounded_variation(x_model) && !(delta < drift_c(x_model)))
      throw std::invalid_argument(
          "RefractedModel: bounded-variation paths require 0 <= delta < c");
  }

  LevyModel y_model() const { return with_drift_reduced(x_model, delta); }
};

// Right-inverse of psi(lambda) - delta*lambda.
inline double varphi_inverse(const RefractedModel& rm, double q) {
  return phi_inverse(rm.y_model(), q);
}

// E[Y_1] = E[X_1] - delta; downstream code applies (.)_+ semantics.
inline double net_profit_margin(const RefractedModel& rm) {
  return mean_at_one(rm.x_model) - rm.delta;
}

}  // namespace parisian
