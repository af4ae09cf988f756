#pragma once

// Core domain types and exact wealth/return accounting shared by the
// simulator, the strategies and the backtest driver.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ratchet {

// One unit of tick time equals one trading day.
using Tick = std::size_t;

// An asset is either cash or one security of a panel. Ordering puts cash
// first, then securities by panel index; md3 tie-breaking relies on it.
class Asset {
 public:
  constexpr Asset() = default;

  static constexpr Asset cash() noexcept { return Asset{0}; }
  static constexpr Asset security(std::size_t index) noexcept {
    return Asset{index + 1};
  }

  constexpr bool is_cash() const noexcept { return code_ == 0; }
  constexpr std::size_t security_index() const {
    if (is_cash()) throw std::logic_error("cash has no security index");
    return code_ - 1;
  }

  constexpr auto operator<=>(const Asset&) const noexcept = default;

 private:
  explicit constexpr Asset(std::size_t code) : code_(code) {}
  std::size_t code_ = 0;  // 0 = cash, i + 1 = security i
};

// One security's positive prices on an integer tick axis. Labels, when
// present, are ISO-8601 dates aligned one-to-one with the prices.
struct PriceSeries {
  std::string security_id;
  std::vector<double> prices;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return prices.size(); }
};

inline void validate(const PriceSeries& s) {
  if (s.prices.empty()) throw std::invalid_argument("price series is empty");
  for (double p : s.prices)
    if (!(p > 0.0)) throw std::invalid_argument("price series has non-positive price");
  if (!s.labels.empty()) {
    if (s.labels.size() != s.prices.size())
      throw std::invalid_argument("labels/prices length mismatch");
    for (std::size_t i = 1; i < s.labels.size(); ++i)
      if (!(s.labels[i - 1] < s.labels[i]))
        throw std::invalid_argument("labels not strictly increasing");
  }
}

// N_s series of identical length on a shared tick axis.
struct PricePanel {
  std::vector<PriceSeries> securities;

  std::size_t count() const noexcept { return securities.size(); }
  std::size_t length() const noexcept {
    return securities.empty() ? 0 : securities.front().size();
  }
};

inline void validate(const PricePanel& panel) {
  if (panel.securities.empty()) throw std::invalid_argument("panel is empty");
  const std::size_t len = panel.securities.front().size();
  for (const auto& s : panel.securities) {
    validate(s);
    if (s.size() != len) throw std::invalid_argument("panel series lengths differ");
  }
  for (std::size_t i = 0; i < panel.count(); ++i)
    for (std::size_t j = i + 1; j < panel.count(); ++j)
      if (panel.securities[i].security_id == panel.securities[j].security_id)
        throw std::invalid_argument("duplicate security_id in panel");
}

// Price of an asset at a tick; cash is the numeraire and always quotes 1.
inline double asset_price(const PricePanel& panel, Asset asset, Tick t) {
  if (asset.is_cash()) return 1.0;
  return panel.securities.at(asset.security_index()).prices.at(t);
}

// All-in portfolio: either cash or a quantity of exactly one security.
struct PortfolioState {
  Asset held = Asset::cash();
  double quantity = 0.0;  // securities held; fractional allowed
  double cash = 0.0;

  static PortfolioState all_cash(double amount) {
    if (!(amount > 0.0)) throw std::invalid_argument("initial wealth must be positive");
    return PortfolioState{Asset::cash(), 0.0, amount};
  }
};

enum class TradeSide { kBuy, kSell, kSwitch };

inline std::string_view to_string(TradeSide side) {
  switch (side) {
    case TradeSide::kBuy: return "BUY";
    case TradeSide::kSell: return "SELL";
    case TradeSide::kSwitch: return "SWITCH";
  }
  return "?";
}

// cost_paid = cost_rate x traded value; a SWITCH sums both legs.
struct TradeRecord {
  Tick tick = 0;
  TradeSide side = TradeSide::kBuy;
  std::string security_id;
  double price = 0.0;     // execution price (buy leg price for a SWITCH)
  double quantity = 0.0;  // securities bought or sold
  double cost_paid = 0.0;
};

// Mark-to-market wealth. Cash is priced at 1; the held security must have
// a price in `security_prices` (indexed by security).
inline double wealth(const PortfolioState& state,
                     std::span<const double> security_prices) {
  if (state.held.is_cash()) return state.cash;
  const std::size_t idx = state.held.security_index();
  if (idx >= security_prices.size())
    throw std::invalid_argument("unpriced holding");
  return state.cash + state.quantity * security_prices[idx];
}

// Natural-log daily returns r(t_k) and their running sum R(t_n).
// For an input of L wealth samples, entry k of either vector refers to
// sample k+1; cumulative is the exact prefix sum of daily.
struct ReturnSeries {
  std::vector<double> daily;
  std::vector<double> cumulative;
};

inline ReturnSeries returns_from_wealth(std::span<const double> wealth_path) {
  if (wealth_path.size() < 2)
    throw std::invalid_argument("wealth path needs at least two samples");
  for (double w : wealth_path)
    if (!(w > 0.0)) throw std::invalid_argument("non-positive wealth");
  ReturnSeries out;
  out.daily.reserve(wealth_path.size() - 1);
  out.cumulative.reserve(wealth_path.size() - 1);
  double running = 0.0;
  for (std::size_t k = 1; k < wealth_path.size(); ++k) {
    const double r = std::log(wealth_path[k] / wealth_path[k - 1]);
    out.daily.push_back(r);
    running += r;
    out.cumulative.push_back(running);
  }
  return out;
}

struct TradeOutcome {
  PortfolioState state;
  std::optional<TradeRecord> trade;
};

namespace detail {

inline void check_trade_args(double price, double cost_rate) {
  if (!(price > 0.0)) throw std::invalid_argument("price must be positive");
  if (!(cost_rate >= 0.0 && cost_rate < 1.0))
    throw std::invalid_argument("cost_rate must be in [0,1)");
}

}  // namespace detail

// Move the whole portfolio into `target` at `price`, paying a proportional
// cost on the traded value. target == held is a no-op. A security-to-security
// move needs both legs' prices; use execute_switch for that.
inline TradeOutcome execute_all_in(const PortfolioState& state, Asset target,
                                   double price, double cost_rate,
                                   Tick tick = 0,
                                   std::string_view security_id = {}) {
  detail::check_trade_args(price, cost_rate);
  if (target == state.held) return {state, std::nullopt};
  if (!state.held.is_cash() && !target.is_cash())
    throw std::invalid_argument("security switch requires both prices; use execute_switch");

  PortfolioState next;
  TradeRecord rec;
  rec.tick = tick;
  rec.security_id = std::string(security_id);
  rec.price = price;
  if (state.held.is_cash()) {  // BUY
    const double invested = state.cash * (1.0 - cost_rate);
    next.held = target;
    next.quantity = invested / price;
    next.cash = 0.0;
    rec.side = TradeSide::kBuy;
    rec.quantity = next.quantity;
    rec.cost_paid = state.cash * cost_rate;
  } else {  // SELL
    next.held = Asset::cash();
    next.quantity = 0.0;
    next.cash = state.quantity * price * (1.0 - cost_rate);
    rec.side = TradeSide::kSell;
    rec.quantity = state.quantity;
    rec.cost_paid = state.quantity * price * cost_rate;
  }
  return {next, rec};
}

// Security-to-security rotation: sell at sell_price, buy at buy_price,
// paying the proportional cost on each leg.
inline TradeOutcome execute_switch(const PortfolioState& state, Asset target,
                                   double sell_price, double buy_price,
                                   double cost_rate, Tick tick = 0,
                                   std::string_view security_id = {}) {
  detail::check_trade_args(sell_price, cost_rate);
  detail::check_trade_args(buy_price, cost_rate);
  if (state.held.is_cash() || target.is_cash() || target == state.held)
    throw std::invalid_argument("execute_switch needs two distinct securities");

  const double sell_value = state.quantity * sell_price;
  const double interim_cash = sell_value * (1.0 - cost_rate);
  PortfolioState next;
  next.held = target;
  next.quantity = interim_cash * (1.0 - cost_rate) / buy_price;
  next.cash = 0.0;

  TradeRecord rec;
  rec.tick = tick;
  rec.side = TradeSide::kSwitch;
  rec.security_id = std::string(security_id);
  rec.price = buy_price;
  rec.quantity = next.quantity;
  rec.cost_paid = sell_value * cost_rate + interim_cash * cost_rate;
  return {next, rec};
}

}  // namespace ratchet
