#pragma once

// Synthetic price paths from the mean-reverting process
//
//   dX = alpha (A - X) dt + beta X dW,      dA = mu A dt
//
// integrated with the Milstein scheme on a fixed substep grid and sampled at
// integer ticks. The attractor A(t) has a closed form and is advanced exactly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "ratchet/market_model.hpp"
#include "ratchet/rng.hpp"

namespace ratchet {

struct GouParams {
  double alpha = 0.0;  // mean-reversion rate, 1/time
  double a0 = 0.0;     // initial attractor level, > 0
  double beta = 0.0;   // volatility, 1/sqrt(time)
  double mu = 0.0;     // attractor growth rate, 1/time
  double x0 = 0.0;     // initial price; defaults to a0

  static GouParams make(double alpha, double a0, double beta, double mu) {
    return GouParams{alpha, a0, beta, mu, a0};
  }
};

inline void validate(const GouParams& p) {
  if (!(p.a0 > 0.0)) throw std::invalid_argument("a0 must be positive");
  if (!(p.x0 > 0.0)) throw std::invalid_argument("x0 must be positive");
  if (p.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (p.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
}

struct SimConfig {
  std::size_t n_units = 1000;  // units of time; output has n_units + 1 samples
  std::size_t substeps = 16;   // integration steps per unit of time
  std::uint64_t seed = 0;
};

struct EnsembleConfig {
  std::size_t n_paths = 30000;
  std::uint64_t base_seed = 0;  // path p runs on substream(base_seed, p)
};

// Box-Muller: two independent standard normals from two uniforms in (0,1).
// A zero first uniform would hit the log singularity and is resampled.
template <class UniformSource>
std::pair<double, double> normal_pair(UniformSource&& uniform) {
  double u1 = uniform();
  while (!(u1 > 0.0)) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

// Standard normal stream over a seeded substream; the second variate of each
// Box-Muller pair is cached.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t stream_seed) : rng_(stream_seed) {}

  double operator()() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    auto [z1, z2] = normal_pair([this] { return rng_.uniform(); });
    cached_ = z2;
    have_cached_ = true;
    return z1;
  }

 private:
  Xoshiro256pp rng_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// One Milstein update of the price: the diffusion term is beta*x, whose
// derivative contributes the (dw^2 - dt) correction.
inline double milstein_step(double x, double a, const GouParams& p, double dt,
                            double dw) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  return x + p.alpha * (a - x) * dt + p.beta * x * dw +
         0.5 * p.beta * p.beta * x * (dw * dw - dt);
}

// Exact solution of dA = mu A dt over one step.
inline double attractor_update(double a, double mu, double dt) {
  if (!(a > 0.0)) throw std::invalid_argument("attractor must be positive");
  return a * std::exp(mu * dt);
}

// Non-positive intermediate prices (possible at coarse substeps) are floored
// at this fraction of a0 and counted, so log-returns stay defined downstream.
inline constexpr double kPositivityFloorScale = 1e-12;

struct SimulatedPath {
  PriceSeries series;
  std::size_t floored_steps = 0;
};

inline SimulatedPath simulate_path(const GouParams& params, const SimConfig& cfg) {
  validate(params);
  if (cfg.substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (cfg.n_units < 1) throw std::invalid_argument("n_units must be >= 1");

  SimulatedPath out;
  out.series.security_id = "sim";
  out.series.prices.reserve(cfg.n_units + 1);

  NormalSource normal(cfg.seed);
  const double dt = 1.0 / static_cast<double>(cfg.substeps);
  const double sqrt_dt = std::sqrt(dt);
  const double floor_price = kPositivityFloorScale * params.a0;

  double x = params.x0;
  double a = params.a0;
  out.series.prices.push_back(x);
  for (std::size_t unit = 0; unit < cfg.n_units; ++unit) {
    for (std::size_t s = 0; s < cfg.substeps; ++s) {
      const double dw = normal() * sqrt_dt;
      x = milstein_step(x, a, params, dt, dw);
      if (!(x > 0.0)) {
        x = floor_price;
        ++out.floored_steps;
      }
      a = attractor_update(a, params.mu, dt);
    }
    out.series.prices.push_back(x);
  }
  return out;
}

}  // namespace ratchet
