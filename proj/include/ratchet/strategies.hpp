#pragma once

// The three decision rules. All of them see prices only: decisions never
// depend on wealth or on how much is held, and ties keep the current
// position so noise-free data never generates trades.
//
//   md1 - compare the price with a known global average A.
//   md2 - same comparison against the m-tick moving average (current tick
//         included in the window).
//   md3 - multi-security rotation: move to the candidate k maximizing the
//         z-score of the ratio X_current / X_k over the last m ticks.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "ratchet/market_model.hpp"
#include "ratchet/rng.hpp"

namespace ratchet {

using Decision = Asset;

struct Md1Params {
  double a_global = 0.0;  // the known average price, > 0
};

struct Md2Params {
  std::size_t m = 1;  // moving-average window, >= 1
};

struct Md3Params {
  std::size_t m = 1;
};

// Binomial two-point price model: price = a1 + amp * phi, phi = +/-1 with
// probability 1/2. amp < a1 keeps prices positive; amp = 0 degenerates to a
// constant price.
struct BinomialModel {
  double a1 = 2.0;
  double amp = 1.0;
};

inline void validate(const BinomialModel& model) {
  if (!(model.a1 > 0.0)) throw std::invalid_argument("a1 must be positive");
  if (!(model.amp >= 0.0 && model.amp < model.a1))
    throw std::invalid_argument("amp must satisfy 0 <= amp < a1");
}

// Above the average get money, below it get the security, on it hold.
inline Decision md1_decide(double price, const Md1Params& p, Decision current) {
  if (!(price > 0.0)) throw std::invalid_argument("price must be positive");
  if (!(p.a_global > 0.0)) throw std::invalid_argument("a_global must be positive");
  if (price > p.a_global) return Asset::cash();
  if (price < p.a_global) return Asset::security(0);
  return current;
}

// Arithmetic mean of the m most recent prices, current tick included.
inline double moving_average(const PriceSeries& series, Tick t, std::size_t m) {
  if (m < 1) throw std::invalid_argument("window must be >= 1");
  if (t >= series.size()) throw std::out_of_range("tick outside series");
  if (t + 1 < m) throw std::invalid_argument("warm-up: window not yet filled");
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) sum += series.prices[t - j];
  return sum / static_cast<double>(m);
}

inline Decision md2_decide(const PriceSeries& series, Tick t, const Md2Params& p,
                           Decision current) {
  const double local_average = moving_average(series, t, p.m);
  return md1_decide(series.prices[t], Md1Params{local_average}, current);
}

struct RatioStats {
  double mean = 0.0;   // r_jk
  double sigma = 0.0;  // spread of the ratio over the window, >= 0
};

// Mean and spread of X_j / X_k over the last m ticks. Cash quotes 1, so
// either side may be cash. The sigma radicand is clamped at 0 against
// rounding on constant-ratio windows.
inline RatioStats md3_stats(const PricePanel& panel, Tick t, std::size_t m,
                            Asset j, Asset k) {
  if (m < 1) throw std::invalid_argument("window must be >= 1");
  if (t >= panel.length()) throw std::out_of_range("tick outside panel");
  if (t + 1 < m) throw std::invalid_argument("warm-up: window not yet filled");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    const double ratio = asset_price(panel, j, t - p) / asset_price(panel, k, t - p);
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  const double mean = sum / static_cast<double>(m);
  const double radicand = sum_sq / static_cast<double>(m) - mean * mean;
  return {mean, radicand > 0.0 ? std::sqrt(radicand) : 0.0};
}

// Degenerate windows (sigma ~ 0) score 0, the same as staying put, so a
// constant ratio neither attracts nor repels.
inline double md3_score(const PricePanel& panel, Tick t, std::size_t m,
                        Asset current, Asset candidate) {
  if (candidate == current) return 0.0;
  const RatioStats stats = md3_stats(panel, t, m, current, candidate);
  if (stats.sigma < 1e-12 * stats.mean) return 0.0;
  const double ratio_now =
      asset_price(panel, current, t) / asset_price(panel, candidate, t);
  return (ratio_now - stats.mean) / stats.sigma;
}

// Evaluate every candidate (cash first, then securities in panel order) and
// move to the best strictly positive score; otherwise stay. Iterating in
// asset order and replacing only on a strictly greater score implements the
// lowest-index tie rule.
inline Decision md3_decide(const PricePanel& panel, Tick t, const Md3Params& p,
                           Asset current) {
  double best_score = 0.0;
  Decision best = current;
  const auto consider = [&](Asset candidate) {
    if (candidate == current) return;
    const double score = md3_score(panel, t, p.m, current, candidate);
    if (score > best_score) {
      best_score = score;
      best = candidate;
    }
  };
  consider(Asset::cash());
  for (std::size_t i = 0; i < panel.count(); ++i) consider(Asset::security(i));
  return best;
}

// n independent draws of the two-point model.
inline PriceSeries binomial_path(const BinomialModel& model, std::size_t n,
                                 std::uint64_t seed) {
  validate(model);
  if (n < 1) throw std::invalid_argument("path length must be >= 1");
  PriceSeries series;
  series.security_id = "binomial";
  series.prices.reserve(n);
  Xoshiro256pp rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const bool up = (rng.next() >> 63) != 0;
    series.prices.push_back(up ? model.a1 + model.amp : model.a1 - model.amp);
  }
  return series;
}

}  // namespace ratchet
