#include <cmath>

#include "catch_amalgamated.hpp"
#include "parisian/mc.hpp"
#include "parisian/ruin.hpp"

using namespace parisian;

namespace {

const RefractedModel kClexp{CramerLundbergExp{6.0, 5.0, 1.0}, 0.0};
const RefractedModel kClexpRef{CramerLundbergExp{9.0, 5.0, 1.0}, 3.0};
const RefractedModel kBrownianRef{BrownianRisk{6.0, 6.0}, 3.0};

McConfig cfg_with(std::uint64_t paths, unsigned workers = 1,
                  std::uint64_t seed = 7) {
  McConfig cfg;
  cfg.paths = paths;
  cfg.workers = workers;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("bit-identical estimates across worker counts") {
  for (const RefractedModel& rm : {kClexp, kBrownianRef}) {
    const auto base = simulate_parisian(rm, 1.0, 2.0, cfg_with(20000, 1));
    for (unsigned workers : {4u, 8u}) {
      const auto est = simulate_parisian(rm, 1.0, 2.0, cfg_with(20000, workers));
      REQUIRE(est.value == base.value);
      REQUIRE(est.stderr_ == base.stderr_);
      REQUIRE(est.truncated == base.truncated);
    }
  }
}

TEST_CASE("different seeds decorrelate") {
  const auto a = simulate_parisian(kClexp, 1.0, 2.0, cfg_with(20000, 1, 1));
  const auto b = simulate_parisian(kClexp, 1.0, 2.0, cfg_with(20000, 1, 2));
  REQUIRE(a.value != b.value);
}

TEST_CASE("quadrupling paths roughly halves the standard error") {
  const auto small = simulate_parisian(kClexp, 1.0, 2.0, cfg_with(25000));
  const auto large = simulate_parisian(kClexp, 1.0, 2.0, cfg_with(100000));
  const double ratio = small.stderr_ / large.stderr_;
  REQUIRE(ratio > 2.0 * 0.8);
  REQUIRE(ratio < 2.0 * 1.2);
}

TEST_CASE("exact CL-exp simulator agrees with Theorem 3.1") {
  for (const RefractedModel& rm : {kClexp, kClexpRef}) {
    for (double x : {1.0, 5.0}) {
      const auto est = simulate_parisian(rm, x, 2.0, cfg_with(200000));
      const double ref = parisian_ruin_prob(ParisianQuery(rm, x, 2.0)).value;
      REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_);
      REQUIRE(est.truncated == 0);
    }
  }
}

TEST_CASE("Brownian simulator agrees with Theorem 3.1") {
  const auto est = simulate_parisian(kBrownianRef, 5.0, 2.0, cfg_with(100000));
  const double ref =
      parisian_ruin_prob(ParisianQuery(kBrownianRef, 5.0, 2.0)).value;
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_);
}

TEST_CASE("discretization refinement stays within the tolerance band") {
  McConfig coarse = cfg_with(40000);
  coarse.step = 2.0 / 2000.0;
  McConfig fine = cfg_with(40000);
  fine.step = coarse.step / 4.0;
  const auto a = simulate_parisian(kBrownianRef, 1.0, 2.0, coarse);
  const auto b = simulate_parisian(kBrownianRef, 1.0, 2.0, fine);
  const double combined = std::hypot(a.stderr_, b.stderr_);
  REQUIRE(std::abs(a.value - b.value) <= std::max(3.0 * combined, 5e-3));
}

TEST_CASE("tiny delay approaches classical ruin") {
  const auto est = simulate_parisian(kClexpRef, 1.0, 1e-3, cfg_with(100000));
  const double ref = classical_ruin_u(kClexpRef, 1.0);
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_ + 2e-3);
}

TEST_CASE("ruin vanishes far above the barrier") {
  const auto est = simulate_parisian(kClexp, 200.0, 2.0, cfg_with(10000));
  REQUIRE(est.value <= 1e-4);
}

TEST_CASE("exit at the barrier is exactly one") {
  const auto est = simulate_functional(
      kClexpRef, ParisianQuery(kClexpRef, 5.0, 2.0, 0.0, 5.0),
      McFunctional::exit_before_parisian, cfg_with(1000));
  REQUIRE(est.value == 1.0);
  REQUIRE(est.stderr_ == 0.0);
}

TEST_CASE("discounted functional at q = 0 equals the plain estimate") {
  const auto plain = simulate_parisian(kClexpRef, 1.0, 2.0, cfg_with(20000));
  const auto disc = simulate_functional(
      kClexpRef, ParisianQuery(kClexpRef, 1.0, 2.0, 0.0, 0.0),
      McFunctional::discounted_parisian, cfg_with(20000));
  REQUIRE(disc.value == plain.value);
}

TEST_CASE("first passage within r matches the formula") {
  const auto est = simulate_functional(
      kClexp, ParisianQuery(kClexp, -1.0, 2.0),
      McFunctional::first_passage_within_r, cfg_with(100000));
  const double ref = tau_up_within_r(kClexp.x_model, -1.0, 2.0);
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_);
}

TEST_CASE("first passage within r matches the formula for Brownian paths") {
  const auto est = simulate_functional(
      kBrownianRef, ParisianQuery(kBrownianRef, -1.0, 1.0),
      McFunctional::first_passage_within_r, cfg_with(50000));
  const double ref = tau_up_within_r(kBrownianRef.x_model, -1.0, 1.0);
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_);
}

TEST_CASE("overshoot transform matches Eq. (2.9)") {
  ParisianQuery query(kClexpRef, 2.0, 1.0, 1.0);  // q carries theta = alpha = 1
  const auto est = simulate_functional(kClexpRef, query,
                                       McFunctional::overshoot_exp,
                                       cfg_with(100000));
  const double ref = overshoot_laplace_y(kClexpRef, 2.0, 1.0);
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_);
}

TEST_CASE("first passage up of U matches Eq. (2.6)") {
  // Simulate E[e^{-q kappa_b^+}] as a barrier exit with a delay long enough
  // that Parisian ruin cannot preempt the passage.
  McConfig cfg = cfg_with(50000);
  cfg.step = 1e-3;
  cfg.horizon = 2e4;
  const double r_big = 1e4;
  const auto est = simulate_functional(
      kBrownianRef, ParisianQuery(kBrownianRef, 1.0, r_big, 0.1, 4.0),
      McFunctional::exit_before_parisian, cfg);
  const double ref = first_passage_up_u(kBrownianRef, 1.0, 4.0, 0.1);
  REQUIRE(std::abs(est.value - ref) <= 3.0 * est.stderr_ + 1e-3);
}

TEST_CASE("step validation for diffusions") {
  McConfig cfg = cfg_with(100);
  cfg.step = 1.0;  // far coarser than r/500
  REQUIRE_THROWS_AS(simulate_parisian(kBrownianRef, 1.0, 2.0, cfg),
                    std::invalid_argument);
}
