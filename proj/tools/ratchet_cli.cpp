// Command-line front end: simulate price paths, sweep the strategy window
// over Monte Carlo ensembles, backtest historical panels and print the exact
// binomial-model expectation. Every file-producing run writes a manifest
// (<out>.manifest.json) sufficient to reproduce its outputs byte-for-byte;
// --from-manifest re-runs one, with --out/--threads overridable.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure
// (positivity-floor events beyond --max-floored).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ratchet/ratchet.hpp"
#include "ratchet/text_format.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ratchet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// ---------------------------------------------------------------------------
// small utilities

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string fnv1a64_hex(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (file.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// "1..30", "1..30:2", "1,2,5" and combinations thereof.
std::vector<std::size_t> parse_m_list(const std::string& text) {
  std::vector<std::size_t> values;
  std::stringstream tokens(text);
  std::string token;
  while (std::getline(tokens, token, ',')) {
    if (token.empty()) throw std::invalid_argument("empty m token");
    const auto dots = token.find("..");
    if (dots == std::string::npos) {
      values.push_back(std::stoul(token));
      continue;
    }
    const std::size_t lo = std::stoul(token.substr(0, dots));
    std::string rest = token.substr(dots + 2);
    std::size_t step = 1;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = std::stoul(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const std::size_t hi = std::stoul(rest);
    if (step == 0 || hi < lo) throw std::invalid_argument("bad m range: " + token);
    for (std::size_t v = lo; v <= hi; v += step) values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty m list");
  for (std::size_t v : values)
    if (v == 0) throw std::invalid_argument("m must be >= 1");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1])
      throw std::invalid_argument("m values must be strictly ascending");
  return values;
}

// A delimited table with a one-line header, mirrored 1:1 into JSON.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write_csv(std::ostream& out, const std::vector<std::string>& trailer = {}) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    for (const auto& line : trailer) out << line << '\n';
  }

  json to_json() const { return json{{"columns", columns}, {"rows", rows}}; }
};

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

struct OutputSink {
  std::optional<fs::path> out_path;  // empty = stdout
  bool json_mirror = false;

  void deliver(const Table& table, const std::vector<std::string>& trailer,
               json extra_json) const {
    std::ostringstream csv;
    table.write_csv(csv, trailer);
    json doc = std::move(extra_json);
    doc["table"] = table.to_json();
    if (!out_path) {
      if (json_mirror)
        std::cout << doc.dump(2) << '\n';
      else
        std::cout << csv.str();
      return;
    }
    write_text_file(*out_path, csv.str());
    if (json_mirror) write_text_file(fs::path(*out_path) += ".json", doc.dump(2));
  }
};

// ---------------------------------------------------------------------------
// run manifests

struct ManifestWriter {
  std::string command;
  json parameters = json::object();
  json inputs = json::object();
  std::vector<std::string> outputs;

  void add_input(const fs::path& path) { inputs[path.string()] = fnv1a64_hex(path); }

  void write(const fs::path& out_path) const {
    json doc;
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["timestamp"] = iso_timestamp();
    doc["parameters"] = parameters;
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    write_text_file(fs::path(out_path) += ".manifest.json", doc.dump(2));
  }
};

json load_manifest_parameters(const fs::path& path, const std::string& command) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open manifest " + path.string());
  json doc;
  try {
    file >> doc;
  } catch (const json::exception& err) {
    throw DataError("bad manifest " + path.string() + ": " + err.what());
  }
  if (doc.value("command", "") != command)
    throw DataError("manifest " + path.string() + " records command '" +
                    doc.value("command", "") + "', not '" + command + "'");
  return doc.value("parameters", json::object());
}

// Restore a parameter from the manifest unless the flag was given explicitly.
template <class T>
void restore(CLI::App* cmd, const std::string& flag, const json& params, T& var) {
  const std::string key = flag.substr(2);
  if (params.contains(key) && cmd->count(flag) == 0) var = params[key].get<T>();
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  double alpha = 0.0;
  double a0 = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double x0 = std::numeric_limits<double>::quiet_NaN();  // unset = a0
  std::size_t units = 1000;
  std::size_t substeps = 16;
  std::uint64_t seed = 0;
  std::uint64_t max_floored = 0;
  std::string out;
  bool json_mirror = false;
  std::string from_manifest;
};

int run_simulate(const SimulateOpts& o) {
  const double x0 = std::isnan(o.x0) ? o.a0 : o.x0;
  GouParams params{o.alpha, o.a0, o.beta, o.mu, x0};
  const SimulatedPath path = simulate_path(params, SimConfig{o.units, o.substeps, o.seed});

  Table table;
  table.columns = {"tick", "price"};
  for (std::size_t t = 0; t < path.series.size(); ++t)
    table.rows.push_back({std::to_string(t), format_double(path.series.prices[t])});

  std::vector<std::string> trailer;
  if (path.floored_steps > 0)
    trailer.push_back("# floored_steps = " + std::to_string(path.floored_steps));

  json extra{{"command", "simulate"}, {"floored_steps", path.floored_steps}};
  OutputSink sink{o.out.empty() ? std::optional<fs::path>{} : fs::path(o.out),
                  o.json_mirror};
  sink.deliver(table, trailer, extra);

  if (!o.out.empty()) {
    ManifestWriter manifest;
    manifest.command = "simulate";
    manifest.parameters = {{"alpha", o.alpha},     {"a0", o.a0},
                           {"beta", o.beta},       {"mu", o.mu},
                           {"x0", x0},             {"units", o.units},
                           {"substeps", o.substeps}, {"seed", o.seed},
                           {"max-floored", o.max_floored}, {"json", o.json_mirror}};
    manifest.outputs = {o.out};
    manifest.write(o.out);
  }
  if (path.floored_steps > o.max_floored) {
    std::cerr << "numerical failure: " << path.floored_steps
              << " positivity-floor events (limit " << o.max_floored << ")\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
  double alpha = 0.0;
  double a0 = 2.0;
  double beta = 0.01;
  double mu = 0.0;
  double x0 = std::numeric_limits<double>::quiet_NaN();
  std::size_t units = 1000;
  std::size_t substeps = 16;
  std::uint64_t seed = 0;
  std::size_t paths = 30000;
  std::string m_spec = "1..30";
  double cost = 0.0;
  double initial_wealth = 1.0;
  unsigned threads = 0;
  std::uint64_t max_floored = 0;
  std::string out;
  bool json_mirror = false;
  std::string from_manifest;
};

int run_sweep(const SweepOpts& o) {
  const std::vector<std::size_t> m_values = parse_m_list(o.m_spec);
  const double x0 = std::isnan(o.x0) ? o.a0 : o.x0;
  GouParams params{o.alpha, o.a0, o.beta, o.mu, x0};
  const SweepResult sweep =
      sweep_m(m_values, params, SimConfig{o.units, o.substeps, 0},
              EnsembleConfig{o.paths, o.seed}, BacktestConfig{o.cost, o.initial_wealth},
              o.threads);

  Table table;
  table.columns = {"m", "mean_R", "stderr", "n_paths"};
  std::uint64_t floored = 0;
  for (const auto& row : sweep.rows) {
    table.rows.push_back({std::to_string(row.m), format_double(row.mean_return),
                          format_double(row.std_error), std::to_string(row.n_paths)});
    floored += row.floored_steps;
  }
  std::vector<std::string> trailer;
  trailer.push_back(sweep.m_c ? "# m_c = " + std::to_string(*sweep.m_c)
                              : "# m_c = undefined");
  if (floored > 0) trailer.push_back("# floored_steps = " + std::to_string(floored));

  json extra{{"command", "sweep"}, {"floored_steps", floored}};
  extra["m_c"] = sweep.m_c ? json(*sweep.m_c) : json(nullptr);
  OutputSink sink{o.out.empty() ? std::optional<fs::path>{} : fs::path(o.out),
                  o.json_mirror};
  sink.deliver(table, trailer, extra);

  if (!o.out.empty()) {
    ManifestWriter manifest;
    manifest.command = "sweep";
    manifest.parameters = {{"alpha", o.alpha},   {"a0", o.a0},
                           {"beta", o.beta},     {"mu", o.mu},
                           {"x0", x0},           {"units", o.units},
                           {"substeps", o.substeps}, {"seed", o.seed},
                           {"paths", o.paths},   {"m", o.m_spec},
                           {"cost", o.cost},     {"initial-wealth", o.initial_wealth},
                           {"max-floored", o.max_floored}, {"json", o.json_mirror}};
    manifest.outputs = {o.out};
    manifest.write(o.out);
  }
  if (floored > o.max_floored) {
    std::cerr << "numerical failure: " << floored
              << " positivity-floor events (limit " << o.max_floored << ")\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// backtest

struct BacktestOpts {
  std::string panel;
  std::string series;
  bool invert = false;
  std::string strategy = "md2";
  double md1_a = 0.0;  // > 0 selects md1 on a single series
  std::string m_spec;
  double cost = 0.0;
  double initial_wealth = 1.0;
  std::string split = "none";
  double coverage = 0.99;
  std::string date_start;
  std::string date_end;
  std::string out;
  bool json_mirror = false;
  std::string from_manifest;
};

struct PartRun {
  std::string part;
  std::size_t m = 0;
  double cumulative_return = 0.0;
  std::size_t n_trades = 0;
  double years = 0.0;  // calendar span of the part; 0 when undated
};

std::string part_name(std::size_t index, std::size_t parts) {
  if (parts == 1) return "whole";
  static const char* roman[] = {"I", "II", "III", "IV", "V"};
  return index < 5 ? roman[index] : std::to_string(index + 1);
}

int run_backtest(const BacktestOpts& o) {
  if (o.panel.empty() == o.series.empty())
    throw CLI::ValidationError("backtest", "give exactly one of --panel or --series");
  const bool md1 = o.md1_a > 0.0;
  if (!md1 && o.m_spec.empty())
    throw CLI::ValidationError("backtest", "--m is required unless --md1-A is given");
  if (o.strategy != "md2" && o.strategy != "md3" && o.strategy != "index")
    throw CLI::ValidationError("backtest", "--strategy must be md2, md3 or index");

  ManifestWriter manifest;
  manifest.command = "backtest";

  // Ingest: panel manifest or a single quote file, then coverage + alignment.
  PricePanel panel;
  if (!o.panel.empty()) {
    manifest.add_input(o.panel);
    const auto tables = load_panel_manifest(o.panel);
    {
      // record each component file
      std::ifstream file(o.panel);
      std::string line;
      std::size_t line_no = 0;
      const fs::path base = fs::path(o.panel).parent_path();
      while (std::getline(file, line)) {
        ++line_no;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        std::string rel = line.substr(comma + 1);
        if (!rel.empty() && rel.back() == '\r') rel.pop_back();
        if (line_no == 1 && (rel == "path")) continue;
        fs::path p{rel};
        if (p.is_relative()) p = base / p;
        if (fs::exists(p)) manifest.add_input(p);
      }
    }
    const CoverageReport report =
        filter_coverage(tables, CoveragePolicy{o.coverage, o.date_start, o.date_end});
    for (const auto& id : report.dropped)
      std::cerr << "dropped (coverage): " << id << '\n';
    panel = align_panel(report.kept);
  } else {
    manifest.add_input(o.series);
    const RawQuoteTable table = load_quote_file(o.series);
    PriceSeries rate = currency_pair(table);
    if (o.invert) rate = invert_rates(rate);
    if (!o.date_start.empty() || !o.date_end.empty()) {
      PriceSeries clipped;
      clipped.security_id = rate.security_id;
      for (std::size_t i = 0; i < rate.size(); ++i) {
        const auto& d = rate.labels[i];
        if (!o.date_start.empty() && d < o.date_start) continue;
        if (!o.date_end.empty() && d > o.date_end) continue;
        clipped.prices.push_back(rate.prices[i]);
        clipped.labels.push_back(d);
      }
      rate = std::move(clipped);
      if (rate.prices.empty()) throw DataError("no quotes inside the date range");
    }
    panel.securities.push_back(std::move(rate));
  }

  std::vector<std::size_t> m_values;
  if (md1)
    m_values = {0};  // m is not a parameter of md1; report it as 0
  else
    m_values = parse_m_list(o.m_spec);

  const std::size_t parts = o.split == "none" ? 1 : o.split == "halves" ? 2 : 3;
  if (o.split != "none" && o.split != "halves" && o.split != "thirds")
    throw CLI::ValidationError("backtest", "--split must be none, halves or thirds");

  // md1 has no warm-up; windowed strategies need m-1 warm-up ticks plus room
  // to trade inside every part.
  const std::size_t per_part = md1 ? 1 : m_values.back() + 2;
  if (panel.length() < parts * per_part)
    throw DataError("panel too short: " + std::to_string(panel.length()) +
                    " ticks for " + std::to_string(parts) + " part(s) (need " +
                    std::to_string(parts * per_part) + ")");

  std::vector<std::pair<std::string, PricePanel>> intervals;
  intervals.emplace_back("whole", panel);
  if (parts > 1) {
    const auto split = split_intervals(panel, parts);
    for (std::size_t i = 0; i < split.size(); ++i)
      intervals.emplace_back(part_name(i, parts), split[i]);
  }

  const BacktestConfig cfg{o.cost, o.initial_wealth};
  const bool single_run = m_values.size() == 1 && intervals.size() == 1;

  std::vector<PartRun> results;
  std::optional<BacktestResult> detail;           // for the single-run extras
  std::optional<IndexBacktest> index_detail;
  const auto run_one = [&](const PricePanel& data, std::size_t m) {
    try {
      if (md1) {
        if (data.count() != 1) throw DataError("--md1-A needs a single security");
        BacktestResult r = run_single(data.securities[0], Md1Params{o.md1_a}, cfg);
        if (single_run) detail = r;
        return std::pair{r.cumulative_return(), r.trades.size()};
      }
      if (o.strategy == "md3") {
        BacktestResult r = run_md3(data, Md3Params{m}, cfg);
        if (single_run) detail = r;
        return std::pair{r.cumulative_return(), r.trades.size()};
      }
      if (o.strategy == "index" || data.count() > 1) {
        IndexBacktest r = run_index_detail(data, Md2Params{m}, cfg);
        std::size_t trades = 0;
        for (const auto& c : r.components) trades += c.trades.size();
        const double ret = r.index_return_path.back();
        if (single_run) index_detail = std::move(r);
        return std::pair{ret, trades};
      }
      BacktestResult r = run_single(data.securities[0], Md2Params{m}, cfg);
      if (single_run) detail = r;
      return std::pair{r.cumulative_return(), r.trades.size()};
    } catch (const std::invalid_argument& err) {
      throw DataError(std::string("backtest failed: ") + err.what());
    }
  };

  for (const auto& [name, data] : intervals) {
    const auto& labels = data.securities[0].labels;
    const double years =
        labels.empty() ? 0.0 : years_between(labels.front(), labels.back());
    for (std::size_t m : m_values) {
      const auto [ret, trades] = run_one(data, m);
      results.push_back({name, m, ret, trades, years});
    }
  }

  // The yearly figure is reported both ways since either convention is in
  // common use: R/years (log per year) and exp(R/years)-1 (simple).
  Table returns_table;
  returns_table.columns = {"part", "m", "cumulative_return", "n_trades",
                           "yearly_log_return", "yearly_simple_return"};
  for (const auto& r : results) {
    std::string yearly_log;
    std::string yearly_simple;
    if (r.years > 0.0) {
      yearly_log = format_double(r.cumulative_return / r.years);
      yearly_simple = format_double(std::expm1(r.cumulative_return / r.years));
    }
    returns_table.rows.push_back({r.part, std::to_string(r.m),
                                  format_double(r.cumulative_return),
                                  std::to_string(r.n_trades), yearly_log,
                                  yearly_simple});
  }

  json extra{{"command", "backtest"},
             {"strategy", md1 ? "md1" : o.strategy},
             {"cost", o.cost},
             {"securities", panel.count()},
             {"ticks", panel.length()}};

  const bool has_labels = !panel.securities[0].labels.empty();
  std::optional<Table> wealth_table;
  std::optional<Table> trades_table;
  if (single_run && (detail || index_detail)) {
    Table wt;
    wt.columns = has_labels ? std::vector<std::string>{"tick", "date", "wealth", "quantity"}
                            : std::vector<std::string>{"tick", "wealth", "quantity"};
    const auto& wealth_path =
        detail ? detail->wealth_path : index_detail->mean_wealth_path;
    for (std::size_t t = 0; t < wealth_path.size(); ++t) {
      std::vector<std::string> row{std::to_string(t)};
      if (has_labels) row.push_back(panel.securities[0].labels[t]);
      row.push_back(format_double(wealth_path[t]));
      row.push_back(detail ? format_double(detail->quantity_path[t]) : "");
      wt.rows.push_back(std::move(row));
    }
    wealth_table = std::move(wt);

    if (detail) {
      Table tt;
      tt.columns = {"tick", "side", "security", "price", "quantity", "cost_paid"};
      for (const auto& trade : detail->trades)
        tt.rows.push_back({std::to_string(trade.tick), std::string(to_string(trade.side)),
                           trade.security_id, format_double(trade.price),
                           format_double(trade.quantity), format_double(trade.cost_paid)});
      trades_table = std::move(tt);
    }
  }

  if (o.out.empty()) {
    OutputSink sink{std::nullopt, o.json_mirror};
    if (wealth_table) extra["wealth"] = wealth_table->to_json();
    if (trades_table) extra["trades"] = trades_table->to_json();
    sink.deliver(returns_table, {}, extra);
  } else {
    std::ostringstream returns_csv;
    returns_table.write_csv(returns_csv);
    const fs::path returns_path = fs::path(o.out + "_returns.csv");
    write_text_file(returns_path, returns_csv.str());
    manifest.outputs.push_back(returns_path.string());
    if (wealth_table) {
      std::ostringstream csv;
      wealth_table->write_csv(csv);
      const fs::path p(o.out + "_wealth.csv");
      write_text_file(p, csv.str());
      manifest.outputs.push_back(p.string());
    }
    if (trades_table) {
      std::ostringstream csv;
      trades_table->write_csv(csv);
      const fs::path p(o.out + "_trades.csv");
      write_text_file(p, csv.str());
      manifest.outputs.push_back(p.string());
    }
    if (o.json_mirror) {
      json doc = extra;
      doc["returns"] = returns_table.to_json();
      if (wealth_table) doc["wealth"] = wealth_table->to_json();
      if (trades_table) doc["trades"] = trades_table->to_json();
      const fs::path p(o.out + ".json");
      write_text_file(p, doc.dump(2));
      manifest.outputs.push_back(p.string());
    }
    manifest.parameters = {{"panel", o.panel},       {"series", o.series},
                           {"invert", o.invert},     {"strategy", o.strategy},
                           {"md1-A", o.md1_a},       {"m", o.m_spec},
                           {"cost", o.cost},         {"initial-wealth", o.initial_wealth},
                           {"split", o.split},       {"coverage", o.coverage},
                           {"date-start", o.date_start}, {"date-end", o.date_end},
                           {"json", o.json_mirror}};
    manifest.write(o.out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// enumerate

struct EnumerateOpts {
  double a1 = 2.0;
  double amp = 1.0;
  std::size_t n = 0;
  double cost = 0.0;
  std::string out;
  bool json_mirror = false;
  std::string from_manifest;
};

int run_enumerate(const EnumerateOpts& o) {
  const BinomialModel model{o.a1, o.amp};
  const double exact = enumerate_md1_expectation(model, o.n, BacktestConfig{o.cost, 1.0});
  // Reference claim for comparison: (n/8) log((A+a)/(A-a)).
  const double log_delta =
      o.amp > 0.0 ? std::log((o.a1 + o.amp) / (o.a1 - o.amp)) : 0.0;
  const double reference = static_cast<double>(o.n) / 8.0 * log_delta;
  const double ratio = reference != 0.0
                           ? exact / reference
                           : std::numeric_limits<double>::quiet_NaN();

  Table table;
  table.columns = {"n", "exact_mean_R", "reference_n8_logdelta", "ratio"};
  table.rows.push_back({std::to_string(o.n), format_double(exact),
                        format_double(reference), format_double(ratio)});

  json extra{{"command", "enumerate"},
             {"exact_mean_R", exact},
             {"reference_n8_logdelta", reference}};
  OutputSink sink{o.out.empty() ? std::optional<fs::path>{} : fs::path(o.out),
                  o.json_mirror};
  sink.deliver(table, {}, extra);

  if (!o.out.empty()) {
    ManifestWriter manifest;
    manifest.command = "enumerate";
    manifest.parameters = {{"A", o.a1}, {"a", o.amp}, {"n", o.n},
                           {"cost", o.cost}, {"json", o.json_mirror}};
    manifest.outputs = {o.out};
    manifest.write(o.out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluctuation-trapping strategies over simulated and historical prices"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "sample one price path");
  simulate->add_option("--alpha", sim.alpha, "mean-reversion rate");
  simulate->add_option("--a0", sim.a0, "initial attractor level");
  simulate->add_option("--beta", sim.beta, "volatility");
  simulate->add_option("--mu", sim.mu, "attractor growth rate");
  simulate->add_option("--x0", sim.x0, "initial price (default: a0)");
  simulate->add_option("--units", sim.units, "units of time");
  simulate->add_option("--substeps", sim.substeps, "integration steps per unit");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--max-floored", sim.max_floored,
                       "positivity-floor events tolerated before exit 4");
  simulate->add_option("--out", sim.out, "output file (default: stdout)");
  simulate->add_flag("--json", sim.json_mirror, "emit a JSON mirror");
  simulate->add_option("--from-manifest", sim.from_manifest, "re-run a recorded run");

  SweepOpts swp;
  CLI::App* sweep = app.add_subcommand("sweep", "ensemble mean return versus m");
  sweep->add_option("--alpha", swp.alpha, "mean-reversion rate");
  sweep->add_option("--a0", swp.a0, "initial attractor level");
  sweep->add_option("--beta", swp.beta, "volatility");
  sweep->add_option("--mu", swp.mu, "attractor growth rate");
  sweep->add_option("--x0", swp.x0, "initial price (default: a0)");
  sweep->add_option("--units", swp.units, "units of time per path");
  sweep->add_option("--substeps", swp.substeps, "integration steps per unit");
  sweep->add_option("--seed", swp.seed, "ensemble base seed");
  sweep->add_option("--paths", swp.paths, "paths per m value");
  sweep->add_option("--m", swp.m_spec, "window list, e.g. 1..30 or 1,2,5");
  sweep->add_option("--cost", swp.cost, "proportional cost per trade leg");
  sweep->add_option("--initial-wealth", swp.initial_wealth, "starting cash");
  sweep->add_option("--threads", swp.threads, "worker threads (0 = hardware)");
  sweep->add_option("--max-floored", swp.max_floored,
                    "positivity-floor events tolerated before exit 4");
  sweep->add_option("--out", swp.out, "output file (default: stdout)");
  sweep->add_flag("--json", swp.json_mirror, "emit a JSON mirror");
  sweep->add_option("--from-manifest", swp.from_manifest, "re-run a recorded run");

  BacktestOpts bt;
  CLI::App* backtest = app.add_subcommand("backtest", "run a strategy on quote files");
  backtest->add_option("--panel", bt.panel, "panel manifest (security_id,path rows)");
  backtest->add_option("--series", bt.series, "single date,price quote file");
  backtest->add_flag("--invert", bt.invert, "use the reciprocal of the rate");
  backtest->add_option("--strategy", bt.strategy, "md2 | md3 | index");
  backtest->add_option("--md1-A", bt.md1_a, "run md1 with this global average");
  backtest->add_option("--m", bt.m_spec, "window list, e.g. 2..40");
  backtest->add_option("--cost", bt.cost, "proportional cost per trade leg");
  backtest->add_option("--initial-wealth", bt.initial_wealth, "starting cash");
  backtest->add_option("--split", bt.split, "none | halves | thirds");
  backtest->add_option("--coverage", bt.coverage, "minimum quote-day coverage");
  backtest->add_option("--date-start", bt.date_start, "inclusive ISO start date");
  backtest->add_option("--date-end", bt.date_end, "inclusive ISO end date");
  backtest->add_option("--out", bt.out, "output prefix (default: stdout)");
  backtest->add_flag("--json", bt.json_mirror, "emit a JSON mirror");
  backtest->add_option("--from-manifest", bt.from_manifest, "re-run a recorded run");

  EnumerateOpts en;
  CLI::App* enumerate = app.add_subcommand(
      "enumerate", "exact md1 expectation over all binomial paths");
  enumerate->add_option("--A", en.a1, "average price");
  enumerate->add_option("--a", en.amp, "fluctuation amplitude");
  enumerate->add_option("--n", en.n, "ticks (max 20)");
  enumerate->add_option("--cost", en.cost, "proportional cost per trade leg");
  enumerate->add_option("--out", en.out, "output file (default: stdout)");
  enumerate->add_flag("--json", en.json_mirror, "emit a JSON mirror");
  enumerate->add_option("--from-manifest", en.from_manifest, "re-run a recorded run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      // required unless a manifest supplies it
      if (sim.from_manifest.empty() && simulate->count("--a0") == 0) {
        std::cerr << "--a0 is required\nRun with --help for more information.\n";
        return kExitUsage;
      }
      if (!sim.from_manifest.empty()) {
        const json p = load_manifest_parameters(sim.from_manifest, "simulate");
        restore(simulate, "--alpha", p, sim.alpha);
        restore(simulate, "--a0", p, sim.a0);
        restore(simulate, "--beta", p, sim.beta);
        restore(simulate, "--mu", p, sim.mu);
        restore(simulate, "--x0", p, sim.x0);
        restore(simulate, "--units", p, sim.units);
        restore(simulate, "--substeps", p, sim.substeps);
        restore(simulate, "--seed", p, sim.seed);
        restore(simulate, "--max-floored", p, sim.max_floored);
        restore(simulate, "--json", p, sim.json_mirror);
      }
      return run_simulate(sim);
    }
    if (sweep->parsed()) {
      if (!swp.from_manifest.empty()) {
        const json p = load_manifest_parameters(swp.from_manifest, "sweep");
        restore(sweep, "--alpha", p, swp.alpha);
        restore(sweep, "--a0", p, swp.a0);
        restore(sweep, "--beta", p, swp.beta);
        restore(sweep, "--mu", p, swp.mu);
        restore(sweep, "--x0", p, swp.x0);
        restore(sweep, "--units", p, swp.units);
        restore(sweep, "--substeps", p, swp.substeps);
        restore(sweep, "--seed", p, swp.seed);
        restore(sweep, "--paths", p, swp.paths);
        restore(sweep, "--m", p, swp.m_spec);
        restore(sweep, "--cost", p, swp.cost);
        restore(sweep, "--initial-wealth", p, swp.initial_wealth);
        restore(sweep, "--max-floored", p, swp.max_floored);
        restore(sweep, "--json", p, swp.json_mirror);
      }
      return run_sweep(swp);
    }
    if (backtest->parsed()) {
      if (!bt.from_manifest.empty()) {
        const json p = load_manifest_parameters(bt.from_manifest, "backtest");
        restore(backtest, "--panel", p, bt.panel);
        restore(backtest, "--series", p, bt.series);
        restore(backtest, "--invert", p, bt.invert);
        restore(backtest, "--strategy", p, bt.strategy);
        restore(backtest, "--md1-A", p, bt.md1_a);
        restore(backtest, "--m", p, bt.m_spec);
        restore(backtest, "--cost", p, bt.cost);
        restore(backtest, "--initial-wealth", p, bt.initial_wealth);
        restore(backtest, "--split", p, bt.split);
        restore(backtest, "--coverage", p, bt.coverage);
        restore(backtest, "--date-start", p, bt.date_start);
        restore(backtest, "--date-end", p, bt.date_end);
        restore(backtest, "--json", p, bt.json_mirror);
      }
      return run_backtest(bt);
    }
    if (enumerate->parsed()) {
      if (en.from_manifest.empty() && enumerate->count("--n") == 0) {
        std::cerr << "--n is required\nRun with --help for more information.\n";
        return kExitUsage;
      }
      if (!en.from_manifest.empty()) {
        const json p = load_manifest_parameters(en.from_manifest, "enumerate");
        restore(enumerate, "--A", p, en.a1);
        restore(enumerate, "--a", p, en.amp);
        restore(enumerate, "--n", p, en.n);
        restore(enumerate, "--cost", p, en.cost);
        restore(enumerate, "--json", p, en.json_mirror);
      }
      return run_enumerate(en);
    }
  } catch (const CLI::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
