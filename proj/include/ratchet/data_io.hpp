#pragma once

// Ingestion of historical quote files: parse `date,price` CSV, filter out
// irregularly quoted securities, and align the survivors on their common
// quote days to build a panel.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ratchet/market_model.hpp"
#include "ratchet/text_format.hpp"

namespace ratchet {

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct QuoteRow {
  std::string date;  // ISO-8601 calendar date
  double price = 0.0;
};

struct RawQuoteTable {
  std::string security_id;
  std::vector<QuoteRow> rows;  // strictly increasing dates
};

// Which securities count as regularly quoted: a security must be present on
// at least min_coverage of the union of quote dates inside the date range.
struct CoveragePolicy {
  double min_coverage = 0.99;
  std::string start_date;  // inclusive; empty = open
  std::string end_date;    // inclusive; empty = open
};

inline bool is_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  const int month = (text[5] - '0') * 10 + (text[6] - '0');
  const int day = (text[8] - '0') * 10 + (text[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Days since 1970-01-01 for a valid ISO date (proleptic Gregorian).
inline long long date_serial(std::string_view date) {
  if (!is_iso_date(date)) throw DataError("bad date: " + std::string(date));
  long long y = (date[0] - '0') * 1000 + (date[1] - '0') * 100 +
                (date[2] - '0') * 10 + (date[3] - '0');
  const unsigned m = static_cast<unsigned>((date[5] - '0') * 10 + (date[6] - '0'));
  const unsigned d = static_cast<unsigned>((date[8] - '0') * 10 + (date[9] - '0'));
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

// Calendar span in years between two ISO dates (365.25-day years).
inline double years_between(std::string_view first, std::string_view last) {
  return static_cast<double>(date_serial(last) - date_serial(first)) / 365.25;
}

namespace detail {

inline std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

inline bool parse_price_field(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace detail

// Two comma-separated columns `date,price`; a single `date,price` header
// line is auto-detected. Errors carry 1-based physical line numbers.
inline RawQuoteTable parse_quotes(std::istream& input, std::string security_id) {
  RawQuoteTable table;
  table.security_id = std::move(security_id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const std::size_t comma = view.find(',');
    if (comma == std::string_view::npos)
      throw DataError("malformed row at line " + std::to_string(line_no));
    const std::string_view date = detail::trim(view.substr(0, comma));
    const std::string_view price_text = detail::trim(view.substr(comma + 1));
    if (line_no == 1 && date == "date" && price_text == "price") continue;
    if (!is_iso_date(date))
      throw DataError("malformed date at line " + std::to_string(line_no));
    double price = 0.0;
    if (!detail::parse_price_field(price_text, price))
      throw DataError("malformed price at line " + std::to_string(line_no));
    if (!(price > 0.0))
      throw DataError("non-positive price at line " + std::to_string(line_no));
    table.rows.push_back({std::string(date), price});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const QuoteRow& a, const QuoteRow& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (table.rows[i - 1].date == table.rows[i].date)
      throw DataError("duplicate date " + table.rows[i].date + " in " +
                      table.security_id);
  return table;
}

inline void serialize_quotes(const RawQuoteTable& table, std::ostream& out) {
  out << "date,price\n";
  for (const auto& row : table.rows)
    out << row.date << ',' << format_double(row.price) << '\n';
}

struct CoverageReport {
  std::vector<RawQuoteTable> kept;
  std::vector<std::string> dropped;
  std::size_t union_dates = 0;
};

namespace detail {

inline bool in_range(const std::string& date, const CoveragePolicy& policy) {
  if (!policy.start_date.empty() && date < policy.start_date) return false;
  if (!policy.end_date.empty() && date > policy.end_date) return false;
  return true;
}

}  // namespace detail

// Keep the securities quoted on at least min_coverage of the union of quote
// dates within the policy's range; kept tables are restricted to the range.
inline CoverageReport filter_coverage(const std::vector<RawQuoteTable>& tables,
                                      const CoveragePolicy& policy) {
  if (tables.empty()) throw DataError("no quote tables given");
  if (!(policy.min_coverage > 0.0 && policy.min_coverage <= 1.0))
    throw DataError("min_coverage must be in (0,1]");

  std::set<std::string> union_dates;
  for (const auto& table : tables)
    for (const auto& row : table.rows)
      if (detail::in_range(row.date, policy)) union_dates.insert(row.date);
  if (union_dates.empty()) throw DataError("no quotes inside the date range");

  CoverageReport report;
  report.union_dates = union_dates.size();
  for (const auto& table : tables) {
    RawQuoteTable clipped;
    clipped.security_id = table.security_id;
    for (const auto& row : table.rows)
      if (detail::in_range(row.date, policy)) clipped.rows.push_back(row);
    const double coverage = static_cast<double>(clipped.rows.size()) /
                            static_cast<double>(union_dates.size());
    if (coverage >= policy.min_coverage)
      report.kept.push_back(std::move(clipped));
    else
      report.dropped.push_back(table.security_id);
  }
  if (report.kept.empty()) throw DataError("no securities pass coverage");
  return report;
}

// Panel on the intersection of quote dates, in date order; the tick index
// is the position within the intersection.
inline PricePanel align_panel(const std::vector<RawQuoteTable>& tables) {
  if (tables.empty()) throw DataError("no quote tables given");

  std::vector<std::string> common;
  for (const auto& row : tables.front().rows) common.push_back(row.date);
  for (std::size_t i = 1; i < tables.size(); ++i) {
    std::set<std::string> dates;
    for (const auto& row : tables[i].rows) dates.insert(row.date);
    std::erase_if(common, [&](const std::string& d) { return !dates.contains(d); });
  }
  if (common.empty()) throw DataError("no common quote dates across securities");

  PricePanel panel;
  panel.securities.reserve(tables.size());
  for (const auto& table : tables) {
    std::unordered_map<std::string_view, double> by_date;
    by_date.reserve(table.rows.size());
    for (const auto& row : table.rows) by_date.emplace(row.date, row.price);
    PriceSeries series;
    series.security_id = table.security_id;
    series.prices.reserve(common.size());
    series.labels = common;
    for (const auto& date : common) series.prices.push_back(by_date.at(date));
    panel.securities.push_back(std::move(series));
  }
  validate(panel);
  return panel;
}

// An exchange-rate table is already a one-security market: the rate is the
// price of one currency expressed in the other.
inline PriceSeries currency_pair(const RawQuoteTable& rates) {
  if (rates.rows.empty())
    throw DataError("no quotes in " + rates.security_id);
  PriceSeries series;
  series.security_id = rates.security_id;
  series.prices.reserve(rates.rows.size());
  series.labels.reserve(rates.rows.size());
  for (const auto& row : rates.rows) {
    series.prices.push_back(row.price);
    series.labels.push_back(row.date);
  }
  validate(series);
  return series;
}

// Reciprocal view of a rate series (the other currency as the security).
// An id of the form "AAA/BBB" is swapped; anything else gets "~inv".
inline PriceSeries invert_rates(const PriceSeries& series, std::string new_id = "") {
  PriceSeries out;
  if (!new_id.empty()) {
    out.security_id = std::move(new_id);
  } else if (const auto slash = series.security_id.find('/');
             slash != std::string::npos) {
    out.security_id = series.security_id.substr(slash + 1) + "/" +
                      series.security_id.substr(0, slash);
  } else {
    out.security_id = series.security_id + "~inv";
  }
  out.labels = series.labels;
  out.prices.reserve(series.size());
  for (double p : series.prices) out.prices.push_back(1.0 / p);
  return out;
}

inline RawQuoteTable load_quote_file(const std::filesystem::path& path,
                                     std::string security_id = "") {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open " + path.string());
  if (security_id.empty()) security_id = path.stem().string();
  try {
    return parse_quotes(file, std::move(security_id));
  } catch (const DataError& err) {
    throw DataError(path.string() + ": " + err.what());
  }
}

// Manifest format: `security_id,path` per line, optional `id,path` or
// `security_id,path` header; relative paths resolve against the manifest.
inline std::vector<RawQuoteTable> load_panel_manifest(
    const std::filesystem::path& manifest_path) {
  std::ifstream file(manifest_path);
  if (!file) throw DataError("cannot open " + manifest_path.string());
  const std::filesystem::path base = manifest_path.parent_path();

  std::vector<RawQuoteTable> tables;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const std::size_t comma = view.find(',');
    if (comma == std::string_view::npos)
      throw DataError(manifest_path.string() + ": malformed row at line " +
                      std::to_string(line_no));
    const std::string_view id = detail::trim(view.substr(0, comma));
    const std::string_view rel = detail::trim(view.substr(comma + 1));
    if (line_no == 1 && (id == "id" || id == "security_id") && rel == "path") continue;
    if (id.empty() || rel.empty())
      throw DataError(manifest_path.string() + ": malformed row at line " +
                      std::to_string(line_no));
    std::filesystem::path quote_path{std::string(rel)};
    if (quote_path.is_relative()) quote_path = base / quote_path;
    tables.push_back(load_quote_file(quote_path, std::string(id)));
  }
  if (tables.empty()) throw DataError(manifest_path.string() + ": empty manifest");
  return tables;
}

}  // namespace ratchet
