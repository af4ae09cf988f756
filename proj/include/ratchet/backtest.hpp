#pragma once

// Drives the decision rules over price data with proportional transaction
// costs, plus the experiment machinery around them: Monte Carlo ensembles,
// m-sweeps with the plateau statistic m_c, equal-weight index aggregation,
// interval splitting and the exact md1 enumeration over all binomial paths.
//
// Timing convention: the decision at tick t sees prices up to and including
// t and executes at X(t); wealth is marked to market at every tick.
// Cumulative returns are measured against the initial cash, so the cost of
// a trade at the very first tick is visible in R.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ratchet/market_model.hpp"
#include "ratchet/parallel.hpp"
#include "ratchet/sde_sim.hpp"
#include "ratchet/strategies.hpp"

namespace ratchet {

struct BacktestConfig {
  double cost_rate = 0.0;      // proportional cost per trade leg, in [0,1)
  double initial_wealth = 1.0;
};

inline void validate(const BacktestConfig& cfg) {
  if (!(cfg.cost_rate >= 0.0 && cfg.cost_rate < 1.0))
    throw std::invalid_argument("cost_rate must be in [0,1)");
  if (!(cfg.initial_wealth > 0.0))
    throw std::invalid_argument("initial wealth must be positive");
}

struct BacktestResult {
  std::vector<double> wealth_path;    // mark-to-market after the tick's action
  std::vector<double> quantity_path;  // securities held after the tick (N_1)
  std::vector<TradeRecord> trades;
  ReturnSeries returns;  // entry k is tick k, measured against initial wealth

  double cumulative_return() const {
    return returns.cumulative.empty() ? 0.0 : returns.cumulative.back();
  }
};

using SingleStrategy = std::variant<Md1Params, Md2Params>;

namespace detail {

inline ReturnSeries returns_against_initial(double initial_wealth,
                                            const std::vector<double>& wealth_path) {
  std::vector<double> spliced;
  spliced.reserve(wealth_path.size() + 1);
  spliced.push_back(initial_wealth);
  spliced.insert(spliced.end(), wealth_path.begin(), wealth_path.end());
  return returns_from_wealth(spliced);
}

}  // namespace detail

// One security, md1 or md2. Warm-up ticks (md2 only: 0..m-2) hold cash.
inline BacktestResult run_single(const PriceSeries& series,
                                 const SingleStrategy& strategy,
                                 const BacktestConfig& cfg) {
  validate(series);
  validate(cfg);
  const std::size_t warm_up =
      std::holds_alternative<Md2Params>(strategy)
          ? std::get<Md2Params>(strategy).m - 1
          : 0;
  if (series.size() <= warm_up)
    throw std::invalid_argument("warm-up: series shorter than strategy window");

  BacktestResult result;
  result.wealth_path.reserve(series.size());
  result.quantity_path.reserve(series.size());

  PortfolioState state = PortfolioState::all_cash(cfg.initial_wealth);
  for (Tick t = 0; t < series.size(); ++t) {
    const double price = series.prices[t];
    if (t >= warm_up) {
      const Decision target = std::visit(
          [&](const auto& params) {
            using T = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<T, Md1Params>)
              return md1_decide(price, params, state.held);
            else
              return md2_decide(series, t, params, state.held);
          },
          strategy);
      if (target != state.held) {
        auto [next, trade] =
            execute_all_in(state, target, price, cfg.cost_rate, t, series.security_id);
        state = next;
        if (trade) result.trades.push_back(std::move(*trade));
      }
    }
    const double security_price[1] = {price};
    result.wealth_path.push_back(wealth(state, security_price));
    result.quantity_path.push_back(state.held.is_cash() ? 0.0 : state.quantity);
  }
  result.returns = detail::returns_against_initial(cfg.initial_wealth, result.wealth_path);
  return result;
}

// Multi-security rotation. A security-to-security decision routes through
// execute_switch and pays the cost on both legs.
inline BacktestResult run_md3(const PricePanel& panel, const Md3Params& params,
                              const BacktestConfig& cfg) {
  validate(panel);
  validate(cfg);
  if (params.m < 1) throw std::invalid_argument("window must be >= 1");
  if (panel.length() < params.m)
    throw std::invalid_argument("warm-up: panel shorter than strategy window");

  BacktestResult result;
  result.wealth_path.reserve(panel.length());
  result.quantity_path.reserve(panel.length());

  std::vector<double> tick_prices(panel.count());
  PortfolioState state = PortfolioState::all_cash(cfg.initial_wealth);
  for (Tick t = 0; t < panel.length(); ++t) {
    for (std::size_t i = 0; i < panel.count(); ++i)
      tick_prices[i] = panel.securities[i].prices[t];
    if (t + 1 >= params.m) {
      const Decision target = md3_decide(panel, t, params, state.held);
      if (target != state.held) {
        const auto target_id = [&] {
          return target.is_cash() ? std::string_view{}
                                  : std::string_view(
                                        panel.securities[target.security_index()].security_id);
        }();
        TradeOutcome outcome;
        if (state.held.is_cash() || target.is_cash()) {
          const double price = state.held.is_cash()
                                   ? tick_prices[target.security_index()]
                                   : tick_prices[state.held.security_index()];
          const auto record_id = state.held.is_cash()
                                     ? target_id
                                     : std::string_view(
                                           panel.securities[state.held.security_index()]
                                               .security_id);
          outcome = execute_all_in(state, target, price, cfg.cost_rate, t, record_id);
        } else {
          outcome = execute_switch(state, target,
                                   tick_prices[state.held.security_index()],
                                   tick_prices[target.security_index()],
                                   cfg.cost_rate, t, target_id);
        }
        state = outcome.state;
        if (outcome.trade) result.trades.push_back(std::move(*outcome.trade));
      }
    }
    result.wealth_path.push_back(wealth(state, tick_prices));
    result.quantity_path.push_back(state.held.is_cash() ? 0.0 : state.quantity);
  }
  result.returns = detail::returns_against_initial(cfg.initial_wealth, result.wealth_path);
  return result;
}

// md2 applied separately to each component with the same initial wealth;
// the index return is the log of the equal-weighted wealth ratio.
struct IndexBacktest {
  std::vector<BacktestResult> components;
  std::vector<double> mean_wealth_path;   // average component wealth per tick
  std::vector<double> index_return_path;  // log(mean wealth / initial wealth)
};

inline IndexBacktest run_index_detail(const PricePanel& panel, const Md2Params& params,
                                      const BacktestConfig& cfg) {
  validate(panel);
  IndexBacktest out;
  out.components.reserve(panel.count());
  for (const auto& series : panel.securities)
    out.components.push_back(run_single(series, params, cfg));

  const std::size_t len = panel.length();
  out.mean_wealth_path.resize(len);
  out.index_return_path.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    detail::KahanSum sum;
    for (const auto& component : out.components) sum.add(component.wealth_path[t]);
    const double mean = sum.value() / static_cast<double>(panel.count());
    out.mean_wealth_path[t] = mean;
    out.index_return_path[t] = std::log(mean / cfg.initial_wealth);
  }
  return out;
}

inline double run_index(const PricePanel& panel, const Md2Params& params,
                        const BacktestConfig& cfg) {
  return run_index_detail(panel, params, cfg).index_return_path.back();
}

// Mean and standard error (sample SD / sqrt(n)) of the final cumulative
// return over a path ensemble. Per-path streams derive only from
// (base_seed, path index) and the reduction runs in path order, so the
// result does not depend on the worker count.
struct EnsembleStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t floored_steps = 0;
};

inline EnsembleStats ensemble_mean_return(const GouParams& params,
                                          const Md2Params& strategy,
                                          const SimConfig& sim,
                                          const EnsembleConfig& ensemble,
                                          const BacktestConfig& cfg,
                                          unsigned threads = 0) {
  validate(params);
  validate(cfg);
  if (ensemble.n_paths < 2) throw std::invalid_argument("ensemble needs >= 2 paths");

  std::vector<double> final_returns(ensemble.n_paths);
  std::vector<std::uint32_t> floored(ensemble.n_paths);
  detail::parallel_for(ensemble.n_paths, threads, [&](std::size_t p) {
    SimConfig path_sim = sim;
    path_sim.seed = substream(ensemble.base_seed, p);
    const SimulatedPath path = simulate_path(params, path_sim);
    const BacktestResult run = run_single(path.series, strategy, cfg);
    final_returns[p] = run.cumulative_return();
    floored[p] = static_cast<std::uint32_t>(path.floored_steps);
  });

  detail::KahanSum sum;
  for (double r : final_returns) sum.add(r);
  const double mean = sum.value() / static_cast<double>(ensemble.n_paths);
  detail::KahanSum sq;
  for (double r : final_returns) sq.add((r - mean) * (r - mean));
  const double sample_var = sq.value() / static_cast<double>(ensemble.n_paths - 1);

  EnsembleStats stats;
  stats.mean = mean;
  stats.std_error = std::sqrt(sample_var / static_cast<double>(ensemble.n_paths));
  stats.n_paths = ensemble.n_paths;
  for (auto f : floored) stats.floored_steps += f;
  return stats;
}

struct SweepRow {
  std::size_t m = 0;
  double mean_return = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t floored_steps = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending in m
  std::optional<std::size_t> m_c;
};

class McUndefined : public std::runtime_error {
 public:
  McUndefined() : std::runtime_error("m_c undefined") {}
};

// Smallest m whose mean return reaches 90% of the plateau level. The
// plateau is the top quartile of m values; it counts as detected when those
// rows agree pairwise within 2 combined SE and sit above the noise floor.
inline std::size_t estimate_m_c(const SweepResult& sweep) {
  const auto& rows = sweep.rows;
  if (rows.size() < 8) throw McUndefined();
  const std::size_t quartile = std::max<std::size_t>(2, rows.size() / 4);
  const std::size_t first_top = rows.size() - quartile;

  detail::KahanSum level_sum;
  double level_var = 0.0;
  for (std::size_t i = first_top; i < rows.size(); ++i) {
    level_sum.add(rows[i].mean_return);
    level_var += rows[i].std_error * rows[i].std_error;
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double gap = std::abs(rows[i].mean_return - rows[j].mean_return);
      const double combined = std::hypot(rows[i].std_error, rows[j].std_error);
      if (gap >= 2.0 * combined) throw McUndefined();
    }
  }
  const double asymptote = level_sum.value() / static_cast<double>(quartile);
  const double asymptote_se = std::sqrt(level_var) / static_cast<double>(quartile);
  if (!(asymptote > 2.0 * asymptote_se)) throw McUndefined();

  const double threshold = 0.9 * asymptote;
  for (const auto& row : rows)
    if (row.mean_return >= threshold) return row.m;
  throw McUndefined();
}

// One ensemble per m value; row i draws its paths from the substream chain
// (base_seed, i, path), so rows are reproducible independently.
inline SweepResult sweep_m(const std::vector<std::size_t>& m_values,
                           const GouParams& params, const SimConfig& sim,
                           const EnsembleConfig& ensemble, const BacktestConfig& cfg,
                           unsigned threads = 0) {
  if (m_values.empty()) throw std::invalid_argument("m_values must be non-empty");
  if (!std::is_sorted(m_values.begin(), m_values.end()) ||
      std::adjacent_find(m_values.begin(), m_values.end()) != m_values.end())
    throw std::invalid_argument("m_values must be strictly ascending");

  SweepResult result;
  result.rows.reserve(m_values.size());
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    EnsembleConfig row_ensemble = ensemble;
    row_ensemble.base_seed = substream(ensemble.base_seed, i);
    const EnsembleStats stats = ensemble_mean_return(
        params, Md2Params{m_values[i]}, sim, row_ensemble, cfg, threads);
    result.rows.push_back(
        {m_values[i], stats.mean, stats.std_error, stats.n_paths, stats.floored_steps});
  }
  try {
    result.m_c = estimate_m_c(result);
  } catch (const McUndefined&) {
    result.m_c = std::nullopt;
  }
  return result;
}

inline constexpr std::size_t kMaxEnumerationTicks = 20;

// Exact mean cumulative return of md1 (A = a1) over all 2^n equiprobable
// binomial paths, by exhaustive replay of run_single on each path.
inline double enumerate_md1_expectation(const BinomialModel& model, std::size_t n,
                                        const BacktestConfig& cfg) {
  validate(model);
  validate(cfg);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (n > kMaxEnumerationTicks)
    throw std::invalid_argument("n too large to enumerate (max 20)");

  const SingleStrategy strategy = Md1Params{model.a1};
  PriceSeries path;
  path.security_id = "binomial";
  path.prices.resize(n);
  detail::KahanSum total;
  const std::uint64_t n_paths = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < n_paths; ++mask) {
    for (std::size_t bit = 0; bit < n; ++bit)
      path.prices[bit] = (mask >> bit) & 1 ? model.a1 + model.amp
                                           : model.a1 - model.amp;
    total.add(run_single(path, strategy, cfg).cumulative_return());
  }
  return total.value() / static_cast<double>(n_paths);
}

// Monte Carlo counterpart of the enumeration, for cross-checks at larger n.
inline EnsembleStats mc_md1_mean(const BinomialModel& model, std::size_t n,
                                 std::size_t n_paths, std::uint64_t base_seed,
                                 const BacktestConfig& cfg, unsigned threads = 0) {
  validate(model);
  if (n_paths < 2) throw std::invalid_argument("need >= 2 paths");
  const SingleStrategy strategy = Md1Params{model.a1};
  std::vector<double> returns(n_paths);
  detail::parallel_for(n_paths, threads, [&](std::size_t p) {
    const PriceSeries path = binomial_path(model, n, substream(base_seed, p));
    returns[p] = run_single(path, strategy, cfg).cumulative_return();
  });
  detail::KahanSum sum;
  for (double r : returns) sum.add(r);
  const double mean = sum.value() / static_cast<double>(n_paths);
  detail::KahanSum sq;
  for (double r : returns) sq.add((r - mean) * (r - mean));
  EnsembleStats stats;
  stats.mean = mean;
  stats.std_error =
      std::sqrt(sq.value() / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
  stats.n_paths = n_paths;
  return stats;
}

// Contiguous equal-length sub-panels (earlier parts take the remainder).
inline std::vector<PricePanel> split_intervals(const PricePanel& panel,
                                               std::size_t parts) {
  validate(panel);
  if (parts < 1) throw std::invalid_argument("parts must be >= 1");
  if (panel.length() < parts)
    throw std::invalid_argument("panel too short to split");
  if (parts == 1) return {panel};

  const std::size_t base = panel.length() / parts;
  const std::size_t remainder = panel.length() % parts;
  std::vector<PricePanel> out;
  out.reserve(parts);
  std::size_t begin = 0;
  for (std::size_t part = 0; part < parts; ++part) {
    const std::size_t len = base + (part < remainder ? 1 : 0);
    PricePanel sub;
    sub.securities.reserve(panel.count());
    for (const auto& series : panel.securities) {
      PriceSeries s;
      s.security_id = series.security_id;
      s.prices.assign(series.prices.begin() + begin,
                      series.prices.begin() + begin + len);
      if (!series.labels.empty())
        s.labels.assign(series.labels.begin() + begin,
                        series.labels.begin() + begin + len);
      sub.securities.push_back(std::move(s));
    }
    out.push_back(std::move(sub));
    begin += len;
  }
  return out;
}

}  // namespace ratchet
