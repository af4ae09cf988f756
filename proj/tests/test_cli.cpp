// End-to-end checks of the command-line tool: runs the built binary on the
// bundled fixtures and inspects files, exit codes and determinism.

#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli_harness.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = RATCHET_CLI_PATH;
const fs::path kFixtures = RATCHET_FIXTURE_DIR;

using cli_harness::CliResult;
using cli_harness::slurp;

fs::path scratch_dir() {
  static const fs::path dir = cli_harness::scratch_dir("ratchet_cli_tests");
  return dir;
}

CliResult run_cli(const std::string& args) {
  return cli_harness::run(kCli, args, scratch_dir());
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("simulate writes the contracted row count", "[cli]") {
  const fs::path out = scratch_dir() / "sim.csv";
  const CliResult r = run_cli("simulate --alpha 1.2 --a0 2 --beta 0.01 --mu 0 "
                              "--units 1000 --seed 7 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(count_lines(text) == 1002);  // header + 1001 samples
  CHECK(text.rfind("tick,price\n0,2\n", 0) == 0);
  CHECK(fs::exists(out.string() + ".manifest.json"));
}

TEST_CASE("simulate with beta 0 emits a constant column", "[cli]") {
  const CliResult r = run_cli("simulate --beta 0 --x0 2 --a0 2 --units 50");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  std::getline(lines, line);  // header
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line.substr(line.find(',') + 1) == "2");
    ++rows;
  }
  CHECK(rows == 51);
}

TEST_CASE("usage errors exit with code 2", "[cli]") {
  CHECK(run_cli("simulate").exit_code == 2);            // missing --a0
  CHECK(run_cli("enumerate --n 21").exit_code == 2);    // bound
  CHECK(run_cli("backtest --m 5").exit_code == 2);      // no input
  CHECK(run_cli("sweep --m 5,3 --paths 16 --units 20").exit_code == 2);
  CHECK(run_cli("definitely-not-a-command").exit_code == 2);
}

TEST_CASE("data errors exit with code 3", "[cli]") {
  CHECK(run_cli("backtest --panel /nonexistent.manifest --m 3").exit_code == 3);
  const fs::path short_panel = kFixtures / "two_tick.csv";
  CHECK(run_cli("backtest --series " + short_panel.string() + " --m 30").exit_code == 3);
}

TEST_CASE("enumerate reports the exact value and the reference", "[cli]") {
  const CliResult r = run_cli("enumerate --A 2 --a 1 --n 8");
  REQUIRE(r.exit_code == 0);
  // exact = (7/4) log 3 = 1.9225715..., reference = log 3, ratio 1.75
  CHECK(r.output.find("1.922571505169192") != std::string::npos);
  CHECK(r.output.find("1.75") != std::string::npos);

  const CliResult zero = run_cli("enumerate --a 0 --n 6");
  REQUIRE(zero.exit_code == 0);
  CHECK(zero.output.find("6,0,0,") != std::string::npos);
}

TEST_CASE("sweep output is byte-stable across reruns and worker counts", "[cli]") {
  const fs::path a = scratch_dir() / "sweep_a.csv";
  const fs::path b = scratch_dir() / "sweep_b.csv";
  const fs::path c = scratch_dir() / "sweep_c.csv";
  const std::string base = "sweep --alpha 1.2 --m 2,4,8 --paths 64 --units 60 --seed 5 ";
  REQUIRE(run_cli(base + "--threads 2 --out " + a.string()).exit_code == 0);
  REQUIRE(run_cli(base + "--threads 1 --out " + b.string()).exit_code == 0);
  REQUIRE(run_cli("sweep --from-manifest " + a.string() + ".manifest.json --threads 3 --out " +
                  c.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) == slurp(c));
}

TEST_CASE("sweep --json mirrors the table", "[cli]") {
  const fs::path out = scratch_dir() / "sweep_json.csv";
  REQUIRE(run_cli("sweep --alpha 0.6 --m 2,4 --paths 32 --units 40 --seed 1 --json --out " +
                  out.string()).exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(doc["command"] == "sweep");
  CHECK(doc["table"]["columns"].size() == 4);
  CHECK(doc["table"]["rows"].size() == 2);
}

TEST_CASE("backtest md2 on a constant panel returns zero for every m", "[cli]") {
  const CliResult r = run_cli("backtest --panel " + (kFixtures / "const.manifest").string() +
                              " --m 2..6 --coverage 0.5");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto second_comma = line.find(',', line.find(',') + 1);
    CHECK(line.substr(second_comma + 1, line.find(',', second_comma + 1) -
                                            second_comma - 1) == "0");
  }
}

TEST_CASE("backtest md1 on the two-tick fixture returns log 3", "[cli]") {
  const CliResult r = run_cli("backtest --series " + (kFixtures / "two_tick.csv").string() +
                              " --md1-A 2 --cost 0");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("whole,0,1.0986122886681098,2") != std::string::npos);

  const CliResult costly = run_cli("backtest --series " +
                                   (kFixtures / "two_tick.csv").string() +
                                   " --md1-A 2 --cost 0.001");
  REQUIRE(costly.exit_code == 0);
  // parse R out of the "whole,0,<R>,..." row: both legs pay 0.1%
  const auto row = costly.output.find("whole,0,");
  REQUIRE(row != std::string::npos);
  const double r_costly = std::stod(costly.output.substr(row + 8));
  CHECK(r_costly == Approx(std::log(3.0 * 0.999 * 0.999)).epsilon(1e-12));
  CHECK(r_costly < std::log(3.0));
}

TEST_CASE("backtest split emits whole plus sub-interval rows", "[cli]") {
  const CliResult r = run_cli("backtest --panel " + (kFixtures / "panel.manifest").string() +
                              " --strategy index --m 3..5 --coverage 0.9 --split halves");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("whole,3,") != std::string::npos);
  CHECK(r.output.find("I,3,") != std::string::npos);
  CHECK(r.output.find("II,5,") != std::string::npos);
}

TEST_CASE("backtest single-m run writes wealth and trade files", "[cli]") {
  const fs::path prefix = scratch_dir() / "bt";
  const CliResult r = run_cli("backtest --series " +
                              (kFixtures / "rate_dem_gbp.csv").string() +
                              " --m 5 --cost 0.0003 --json --out " + prefix.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(prefix.string() + "_returns.csv"));
  REQUIRE(fs::exists(prefix.string() + "_wealth.csv"));
  REQUIRE(fs::exists(prefix.string() + "_trades.csv"));
  const std::string wealth = slurp(prefix.string() + "_wealth.csv");
  CHECK(wealth.rfind("tick,date,wealth,quantity\n", 0) == 0);
  const std::string trades = slurp(prefix.string() + "_trades.csv");
  CHECK(trades.find("BUY") != std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(prefix.string() + ".json"));
  CHECK(doc["strategy"] == "md2");
  CHECK(doc["securities"] == 1);

  // rerun from the manifest into a second prefix: byte-identical files
  const fs::path prefix2 = scratch_dir() / "bt2";
  REQUIRE(run_cli("backtest --from-manifest " + prefix.string() +
                  ".manifest.json --out " + prefix2.string()).exit_code == 0);
  CHECK(slurp(prefix2.string() + "_returns.csv") == slurp(prefix.string() + "_returns.csv"));
  CHECK(slurp(prefix2.string() + "_wealth.csv") == slurp(prefix.string() + "_wealth.csv"));
}

TEST_CASE("backtest --invert runs the reciprocal rate view", "[cli]") {
  const CliResult direct = run_cli("backtest --series " +
                                   (kFixtures / "rate_dem_gbp.csv").string() + " --m 5");
  const CliResult inverted = run_cli("backtest --series " +
                                     (kFixtures / "rate_dem_gbp.csv").string() +
                                     " --m 5 --invert");
  REQUIRE(direct.exit_code == 0);
  REQUIRE(inverted.exit_code == 0);
  CHECK(direct.output != inverted.output);
}
