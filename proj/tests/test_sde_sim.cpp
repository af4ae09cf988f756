#include <catch2/catch.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ratchet/backtest.hpp"
#include "ratchet/sde_sim.hpp"

using namespace ratchet;

namespace {

// Feeds a fixed list of uniforms, then falls back to a constant.
struct ScriptedUniforms {
  std::vector<double> values;
  std::size_t at = 0;
  double operator()() {
    if (at < values.size()) return values[at++];
    return 0.5;
  }
};

}  // namespace

TEST_CASE("normal_pair closed-form point", "[sde]") {
  // u1 = e^{-1/2} gives radius 1, u2 = 1/4 gives angle pi/2.
  ScriptedUniforms src{{std::exp(-0.5), 0.25}};
  const auto [z1, z2] = normal_pair(src);
  CHECK(z1 == Approx(0.0).margin(1e-15));
  CHECK(z2 == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("normal_pair resamples a zero uniform", "[sde]") {
  ScriptedUniforms src{{0.0, 0.0, std::exp(-0.5), 0.25}};
  const auto [z1, z2] = normal_pair(src);
  CHECK(z1 == Approx(0.0).margin(1e-15));
  CHECK(z2 == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("normal stream passes moment checks at one million samples", "[sde]") {
  NormalSource normal(42);
  const std::size_t n = 1'000'000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / static_cast<double>(n);
  const double variance = sum_sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(variance == Approx(1.0).epsilon(0.01));
}

TEST_CASE("milstein_step hand values", "[sde]") {
  SECTION("pure relaxation") {
    GouParams p{1.0, 4.0, 0.0, 0.0, 2.0};
    CHECK(milstein_step(2.0, 4.0, p, 0.5, 123.0) == Approx(3.0).epsilon(1e-15));
  }
  SECTION("identity when alpha and beta vanish") {
    GouParams p{0.0, 2.0, 0.0, 0.0, 2.0};
    CHECK(milstein_step(2.0, 2.0, p, 0.25, 0.7) == 2.0);
  }
  SECTION("second-order correction with dw = 0") {
    GouParams p{1.2, 2.0, 0.01, 0.0, 2.0};
    CHECK(milstein_step(2.0, 2.0, p, 0.01, 0.0) == Approx(1.999999).epsilon(1e-12));
  }
  SECTION("dt must be positive") {
    GouParams p{1.0, 2.0, 0.0, 0.0, 2.0};
    CHECK_THROWS(milstein_step(2.0, 2.0, p, 0.0, 0.0));
  }
}

TEST_CASE("attractor_update is the exact exponential", "[sde]") {
  CHECK(attractor_update(2.0, 0.0, 17.0) == 2.0);
  CHECK(attractor_update(2.0, 0.004, 1.0) == Approx(2.0 * std::exp(0.004)).epsilon(1e-15));
  CHECK(attractor_update(1.0, -0.016, 1000.0) == Approx(std::exp(-16.0)).epsilon(1e-12));
  CHECK_THROWS(attractor_update(0.0, 0.1, 1.0));
}

TEST_CASE("simulate_path is constant at the fixed point", "[sde]") {
  const GouParams p{1.2, 2.0, 0.0, 0.0, 2.0};
  const SimConfig cfg{50, 16, 9};
  const SimulatedPath path = simulate_path(p, cfg);
  REQUIRE(path.series.size() == 51);
  for (double x : path.series.prices) CHECK(x == 2.0);
  CHECK(path.floored_steps == 0);
}

TEST_CASE("deterministic path relaxes monotonically toward the attractor", "[sde]") {
  const GouParams p{0.5, 2.0, 0.0, 0.0, 1.0};
  const SimConfig cfg{60, 16, 0};
  const SimulatedPath path = simulate_path(p, cfg);
  for (std::size_t i = 1; i < path.series.size(); ++i) {
    CHECK(path.series.prices[i] > path.series.prices[i - 1]);
    CHECK(path.series.prices[i] <= 2.0);
  }
  CHECK(path.series.prices.back() == Approx(2.0).epsilon(1e-8));
}

TEST_CASE("substep refinement converges to the exact relaxation", "[sde]") {
  const GouParams p{0.8, 2.0, 0.0, 0.0, 1.0};
  const double t_end = 10.0;
  const double exact = 2.0 + (1.0 - 2.0) * std::exp(-0.8 * t_end);
  double prev_err = 0.0;
  for (std::size_t substeps : {4u, 8u, 16u, 32u, 64u}) {
    const SimulatedPath path = simulate_path(p, SimConfig{10, substeps, 0});
    const double err = std::abs(path.series.prices.back() - exact);
    // halving dt cuts the error by ~2 asymptotically; 1.6 leaves headroom
    if (substeps > 4u) CHECK(err < prev_err / 1.6);
    prev_err = err;
  }
}

TEST_CASE("identical seeds reproduce bit-identical paths", "[sde]") {
  const GouParams p{1.2, 2.0, 0.01, 0.002, 2.0};
  const SimConfig cfg{200, 16, 0xfeedULL};
  const SimulatedPath a = simulate_path(p, cfg);
  const SimulatedPath b = simulate_path(p, cfg);
  REQUIRE(a.series.prices == b.series.prices);

  SimConfig other = cfg;
  other.seed = 0xfeedULL + 1;
  CHECK(simulate_path(p, other).series.prices != a.series.prices);
}

TEST_CASE("simulate_path validates its parameters", "[sde]") {
  const SimConfig ok{10, 4, 0};
  CHECK_THROWS(simulate_path(GouParams{1.0, 0.0, 0.0, 0.0, 1.0}, ok));   // a0
  CHECK_THROWS(simulate_path(GouParams{1.0, 2.0, 0.0, 0.0, 0.0}, ok));   // x0
  CHECK_THROWS(simulate_path(GouParams{-1.0, 2.0, 0.0, 0.0, 2.0}, ok));  // alpha
  CHECK_THROWS(simulate_path(GouParams{1.0, 2.0, -0.1, 0.0, 2.0}, ok));  // beta
  CHECK_THROWS(simulate_path(GouParams::make(1.0, 2.0, 0.0, 0.0), SimConfig{0, 4, 0}));
  CHECK_THROWS(simulate_path(GouParams::make(1.0, 2.0, 0.0, 0.0), SimConfig{10, 0, 0}));
}

TEST_CASE("non-positive steps are floored and counted", "[sde]") {
  // One coarse unit with a drift large enough to overshoot below zero.
  const GouParams p{3.0, 1e-4, 0.0, 0.0, 2.0};
  const SimConfig cfg{1, 1, 0};
  const SimulatedPath path = simulate_path(p, cfg);
  CHECK(path.floored_steps == 1);
  CHECK(path.series.prices.back() == Approx(1e-16).epsilon(1e-12));
}

TEST_CASE("driftless multiplicative walk keeps its mean at x0", "[sde][statistical]") {
  const GouParams p{0.0, 2.0, 0.01, 0.0, 2.0};
  const std::size_t n_units = 200;
  const std::size_t n_paths = 3000;
  std::vector<double> finals(n_paths);
  detail::parallel_for(n_paths, 0, [&](std::size_t i) {
    finals[i] = simulate_path(p, SimConfig{n_units, 16, substream(77, i)})
                    .series.prices.back();
  });
  double sum = 0.0;
  for (double x : finals) sum += x;
  const double mean = sum / static_cast<double>(n_paths);
  double var = 0.0;
  for (double x : finals) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n_paths - 1);
  const double se = std::sqrt(var / static_cast<double>(n_paths));
  CHECK(std::abs(mean - 2.0) < 3.0 * se);
}
