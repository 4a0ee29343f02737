#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "parisian/model.hpp"
#include "parisian/ruin.hpp"

namespace parisian {

struct McConfig {
  std::uint64_t paths = 100000;
  double horizon = 0.0;  // 0 -> auto: max(50 r, 100 / max(margin, 0.1))
  std::uint64_t seed = 1;
  double step = 0.0;  // 0 -> auto: r / 2000 (diffusion models only)
  unsigned workers = 1;
};

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t paths = 0;
  std::uint64_t truncated = 0;  // undecided paths cut at the horizon
  bool truncation_note = false;
};

enum class McFunctional {
  parisian_ruin,
  exit_before_parisian,
  discounted_parisian,
  overshoot_exp,
  first_passage_within_r,
};

namespace mc_detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_idx) {
  std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (path_idx + 1));
  std::uint64_t a = splitmix64(s), b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Lundberg adjustment coefficient of the post-refraction process Y: the
// unique R > 0 with psi_Y(-R) = 0 (equivalently E[e^{-R Y_1}] = 1). The
// Cramer bound P(ruin from u) <= e^{-R u} justifies killing paths above
// 32/R.
inline double adjustment_coefficient(const RefractedModel& rm) {
  auto g = [&](double l) {
    return laplace_exponent(rm.x_model, -l) + rm.delta * l;
  };
  // Domain cap: psi is finite on (-cap, infinity).
  double cap = std::numeric_limits<double>::infinity();
  if (const auto* m = std::get_if<CramerLundbergExp>(&rm.x_model))
    cap = m->alpha;
  else if (const auto* m = std::get_if<JumpDiffusionPhaseType>(&rm.x_model))
    cap = -m->T_mat.eigenvalues().real().maxCoeff();
  double lo = 0.0;
  double hi = std::isfinite(cap) ? 0.5 * cap : 1.0;
  for (int it = 0; g(hi) <= 0.0; ++it) {
    lo = hi;
    hi = std::isfinite(cap) ? 0.5 * (hi + cap) : 2.0 * hi;
    if (it > 200) throw std::runtime_error("mc: no adjustment coefficient");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct PathOutcome {
  double value = 0.0;
  bool truncated = false;
};

// Samples one phase-type jump by running the absorbing chain.
inline double sample_phase_type(const JumpDiffusionPhaseType& m,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Initial state from the simplex alpha.
  double u = unif(rng);
  int state = 0;
  const int n = static_cast<int>(m.alpha_vec.size());
  double acc = 0.0;
  for (; state < n - 1; ++state) {
    acc += m.alpha_vec[state];
    if (u < acc) break;
  }
  Eigen::VectorXd t = m.exit_vector();
  double time = 0.0;
  while (true) {
    const double rate = -m.T_mat(state, state);
    std::exponential_distribution<double> hold(rate);
    time += hold(rng);
    double v = unif(rng) * rate;
    double cum = t[state];
    if (v < cum) return time;  // absorbed
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (j == state) continue;
      cum += m.T_mat(state, j);
      if (v < cum) {
        next = j;
        break;
      }
    }
    if (next < 0) return time;  // guard against rounding
    state = next;
  }
}

struct SimSpec {
  RefractedModel rm;
  McFunctional functional;
  double x, r, q, a;
  double horizon;
  double step;
  double kill_level;
  bool barrier_active = false;  // stop the path when it first reaches a

  // Value contributed when the path reaches the barrier at time t.
  double barrier_value(double t) const {
    return functional == McFunctional::exit_before_parisian
               ? std::exp(-q * t)
               : 0.0;
  }
};

// Exact event-driven path for the exponential-claims model: piecewise
// linear between jumps, with all level crossings solved in closed form.
inline PathOutcome clexp_path(const SimSpec& spec, std::mt19937_64& rng) {
  const auto& m = std::get<CramerLundbergExp>(spec.rm.x_model);
  const double c_below = m.c, c_above = m.c - spec.rm.delta;
  std::exponential_distribution<double> jump_gap(m.eta);
  std::exponential_distribution<double> jump_size(m.alpha);

  // overshoot_exp and first_passage_within_r run constant-drift processes.
  const bool plain_y = spec.functional == McFunctional::overshoot_exp;
  const bool plain_x = spec.functional == McFunctional::first_passage_within_r;

  double t = 0.0, u = spec.x;
  double neg_since = 0.0;  // valid only while u < 0
  if (u < 0.0) neg_since = 0.0;

  while (t < spec.horizon) {
    const double gap = jump_gap(rng);
    const double drift = plain_y   ? c_above
                         : plain_x ? c_below
                         : (u < 0.0 ? c_below : c_above);

    if (plain_x) {
      // First passage of X above 0 within r.
      if (u < 0.0 && drift > 0.0) {
        const double hit = t - u / drift;
        if (hit <= spec.r && hit <= t + gap) return {1.0, false};
      }
      if (t + gap > spec.r) return {0.0, false};
      t += gap;
      u += drift * gap;
      u -= jump_size(rng);
      if (u >= 0.0) return {t <= spec.r ? 1.0 : 0.0, false};
      continue;
    }

    if (plain_y) {
      // Y drifts up at c_above; ruin only by a jump.
      t += gap;
      u += drift * gap;
      if (u > spec.kill_level) return {0.0, false};
      u -= jump_size(rng);
      if (u < 0.0) return {std::exp(spec.q * u), false};
      continue;
    }

    // Refracted process with the Parisian clock.
    if (u < 0.0) {
      const double deadline = neg_since + spec.r;
      const double recover = t - u / c_below;  // exact up-crossing time
      if (deadline <= std::min(recover, t + gap)) {
        // Parisian ruin at the deadline.
        const double val =
            spec.functional == McFunctional::discounted_parisian ||
                    spec.functional == McFunctional::parisian_ruin
                ? std::exp(-spec.q * neg_since)  // e^{-q(kappa - r)}
                : 0.0;
        return {val, false};
      }
      if (recover <= t + gap) {
        // Crosses 0 from below; drift switches.
        const double rest = t + gap - recover;
        u = c_above * rest;
        t += gap;
        if (spec.barrier_active && u >= spec.a)
          return {spec.barrier_value(recover + spec.a / c_above), false};
        u -= jump_size(rng);
        if (u < 0.0) neg_since = t;
        continue;
      }
      t += gap;
      u += c_below * gap;
      u -= jump_size(rng);
      continue;
    }

    // Above 0: linear up-drift until the jump.
    if (spec.barrier_active && u + c_above * gap >= spec.a)
      return {spec.barrier_value(t + (spec.a - u) / c_above), false};
    t += gap;
    u += c_above * gap;
    if (!spec.barrier_active && u > spec.kill_level) return {0.0, false};
    u -= jump_size(rng);
    if (u < 0.0) neg_since = t;
  }
  return {0.0, u >= 0.0 && u <= spec.kill_level};
}

// Discretized path for the Brownian and jump-diffusion models: Euler steps
// with exact Gaussian increments, fine resolution near 0 and adaptive long
// steps far above it.
inline PathOutcome diffusion_path(const SimSpec& spec, std::mt19937_64& rng) {
  double c_x, sigma, eta = 0.0;
  const JumpDiffusionPhaseType* pt = nullptr;
  if (const auto* b = std::get_if<BrownianRisk>(&spec.rm.x_model)) {
    c_x = b->c;
    sigma = b->sigma;
  } else {
    pt = &std::get<JumpDiffusionPhaseType>(spec.rm.x_model);
    c_x = pt->c;
    sigma = pt->sigma;
    eta = pt->eta;
  }
  const double c_above = c_x - spec.rm.delta;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> jump_gap(eta > 0.0 ? eta : 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // P(a Brownian bridge over [0,dt] with endpoints a0, a1 on one side of
  // lvl touches lvl) = exp(-2 (lvl-a0)(lvl-a1) / (sigma^2 dt)).
  auto bridge_touch = [&](double lvl, double a0, double a1, double ddt) {
    return std::exp(-2.0 * (lvl - a0) * (lvl - a1) / (sigma * sigma * ddt));
  };

  const bool plain_y = spec.functional == McFunctional::overshoot_exp;
  const bool plain_x = spec.functional == McFunctional::first_passage_within_r;

  double t = 0.0, u = spec.x;
  double neg_since = (u < 0.0) ? 0.0 : -1.0;
  double next_jump =
      eta > 0.0 ? jump_gap(rng) : std::numeric_limits<double>::infinity();
  const double t_end = plain_x ? spec.r : spec.horizon;

  while (t < t_end) {
    // Step size: fine near 0 (and always below 0); long when far above.
    double dt = spec.step;
    if (sigma > 0.0 && u > 0.0) {
      double dist = u;  // distance to the nearest absorbing level
      if (spec.barrier_active) dist = std::min(dist, spec.a - u);
      const double far = (dist / (6.0 * sigma)) * (dist / (6.0 * sigma));
      // Cap long steps below the Parisian clock so that an excursion below
      // zero contained inside one step can never reach the deadline.
      const double cap =
          (!plain_x && !plain_y) ? std::min(1.0, 0.25 * spec.r) : 1.0;
      dt = std::min(std::max(spec.step, far), cap);
    }
    dt = std::min(dt, t_end - t);
    if (next_jump < t + dt) dt = next_jump - t;
    if (u < 0.0 && !plain_x && !plain_y) {
      const double deadline = neg_since + spec.r;
      if (t + dt >= deadline) dt = deadline - t;
    }
    const double drift = plain_y   ? c_above
                         : plain_x ? c_x
                         : (u < 0.0 ? c_x : c_above);
    double u_new = u + drift * dt;
    if (sigma > 0.0 && dt > 0.0) u_new += sigma * std::sqrt(dt) * gauss(rng);
    double t_new = t + dt;

    // Brownian-bridge corrections for level crossings the grid misses.
    // (The bridge applies to the continuous part; jumps land at t_new.)
    if (sigma > 0.0 && dt > 0.0) {
      if (plain_x) {
        if (u < 0.0 && u_new < 0.0 &&
            unif(rng) < bridge_touch(0.0, u, u_new, dt))
          return {1.0, false};
      } else if (plain_y) {
        if (u > 0.0 && u_new > 0.0 &&
            unif(rng) < bridge_touch(0.0, u, u_new, dt))
          return {1.0, false};  // diffusion creeps: Y = 0 at passage
      } else {
        if (spec.barrier_active && u >= 0.0 && u_new < spec.a &&
            unif(rng) < bridge_touch(spec.a, u, u_new, dt))
          return {spec.barrier_value(t_new), false};
        if (u < 0.0 && u_new < 0.0 &&
            unif(rng) < bridge_touch(0.0, u, u_new, dt))
          neg_since = t + 0.5 * dt;  // clock reset by an unseen up-crossing
      }
    }

    if (eta > 0.0 && t_new >= next_jump) {
      u_new -= sample_phase_type(*pt, rng);
      next_jump = t_new + jump_gap(rng);
    }

    if (plain_x) {
      if (u_new >= 0.0) return {1.0, false};
      u = u_new;
      t = t_new;
      continue;
    }
    if (plain_y) {
      if (u_new < 0.0) return {std::exp(spec.q * u_new), false};
      if (u_new > spec.kill_level) return {0.0, false};
      u = u_new;
      t = t_new;
      continue;
    }

    if (spec.barrier_active && u_new >= spec.a)
      return {spec.barrier_value(t_new), false};

    if (u >= 0.0 && u_new < 0.0) neg_since = t_new;
    if (u_new < 0.0) {
      const double deadline = neg_since + spec.r;
      if (t_new >= deadline) {
        const double val =
            spec.functional == McFunctional::exit_before_parisian
                ? 0.0
                : std::exp(-spec.q * neg_since);
        return {val, false};
      }
    }
    if (!spec.barrier_active && u_new > spec.kill_level) return {0.0, false};
    u = u_new;
    t = t_new;
  }
  if (plain_x) return {0.0, false};
  return {0.0, u >= 0.0 && u <= spec.kill_level};
}

inline McEstimate run(const SimSpec& spec, const McConfig& cfg,
                      bool indicator) {
  if (cfg.paths < 1) throw std::invalid_argument("mc: paths must be >= 1");
  const bool diffusion = !std::holds_alternative<CramerLundbergExp>(
      spec.rm.x_model);
  constexpr std::uint64_t kBlock = 8192;
  const std::uint64_t n_blocks = (cfg.paths + kBlock - 1) / kBlock;
  std::vector<double> block_sum(n_blocks, 0.0), block_sq(n_blocks, 0.0);
  std::vector<std::uint64_t> block_trunc(n_blocks, 0);

  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      const std::uint64_t lo = b * kBlock;
      const std::uint64_t hi = std::min(lo + kBlock, cfg.paths);
      double s = 0.0, s2 = 0.0;
      std::uint64_t tr = 0;
      for (std::uint64_t i = lo; i < hi; ++i) {
        auto rng = path_rng(cfg.seed, i);
        const PathOutcome out =
            diffusion ? diffusion_path(spec, rng) : clexp_path(spec, rng);
        s += out.value;
        s2 += out.value * out.value;
        tr += out.truncated ? 1 : 0;
      }
      block_sum[b] = s;
      block_sq[b] = s2;
      block_trunc[b] = tr;
    }
  };
  const unsigned nw = std::max(1u, cfg.workers);
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sumsq = 0.0;
  std::uint64_t trunc = 0;
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sq[b];
    trunc += block_trunc[b];
  }
  const double n = static_cast<double>(cfg.paths);
  McEstimate est;
  est.value = sum / n;
  est.paths = cfg.paths;
  est.truncated = trunc;
  est.truncation_note = trunc > 0.001 * n;
  if (indicator) {
    est.stderr_ = std::sqrt(std::max(est.value * (1.0 - est.value), 0.0) / n);
  } else {
    const double var = std::max(sumsq / n - est.value * est.value, 0.0);
    est.stderr_ = std::sqrt(var / n);
  }
  return est;
}

inline SimSpec make_spec(const RefractedModel& rm, McFunctional fn, double x,
                         double r, double q, double a, const McConfig& cfg) {
  SimSpec spec{rm, fn, x, r, q, a, 0.0, 0.0, 0.0};
  const double margin = net_profit_margin(rm);
  const bool diffusion =
      !std::holds_alternative<CramerLundbergExp>(rm.x_model);
  if (diffusion) {
    spec.step = cfg.step > 0.0 ? cfg.step : r / 2000.0;
    if (spec.step > r / 500.0)
      throw std::invalid_argument("mc: step must be <= r/500 for diffusions");
  }
  if (margin > 0.0) {
    // Cramer bound: P(ruin from u) <= e^{-R u}, so stopping paths above
    // 20/R truncates less than 3e-9 of the ruin probability.
    spec.kill_level = 20.0 / adjustment_coefficient(rm);
  } else {
    spec.kill_level = std::numeric_limits<double>::infinity();
  }
  // Default horizon: long enough that a surviving path has almost surely
  // drifted up to the kill level (or, without a kill level, far away).
  spec.horizon =
      cfg.horizon > 0.0
          ? cfg.horizon
          : std::max({50.0 * r, 100.0,
                      margin > 0.0 && std::isfinite(spec.kill_level)
                          ? 4.0 * spec.kill_level / margin
                          : 100.0 / std::max(margin, 0.1)});
  return spec;
}

}  // namespace mc_detail

inline McEstimate simulate_parisian(const RefractedModel& rm, double x,
                                    double r, const McConfig& cfg) {
  auto spec = mc_detail::make_spec(rm, McFunctional::parisian_ruin, x, r, 0.0,
                                   0.0, cfg);
  return mc_detail::run(spec, cfg, /*indicator=*/true);
}

// Oracle counterparts of Theorem 3.2 (i)-(iii), Eq. (2.9) and Eq. (5.5).
// For overshoot_exp the query's q field carries the transform argument
// theta; for discounted_parisian a non-finite barrier means "no barrier".
inline McEstimate simulate_functional(const RefractedModel& rm,
                                      const ParisianQuery& query,
                                      McFunctional functional,
                                      const McConfig& cfg) {
  double a = query.a;
  if (functional == McFunctional::discounted_parisian && !(a > query.x))
    a = std::numeric_limits<double>::infinity();
  if (functional == McFunctional::exit_before_parisian && query.x >= a)
    return {1.0, 0.0, cfg.paths, 0, false};
  auto spec =
      mc_detail::make_spec(rm, functional, query.x, query.r, query.q, a, cfg);
  spec.barrier_active = (functional == McFunctional::exit_before_parisian ||
                         functional == McFunctional::discounted_parisian) &&
                        std::isfinite(a);
  const bool indicator =
      query.q == 0.0 && functional != McFunctional::overshoot_exp;
  return mc_detail::run(spec, cfg, indicator);
}

}  // namespace parisian
