#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vanhove/io.hpp"
#include "vanhove/scenario.hpp"

using namespace vanhove;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vanhove-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(parse_format("both"), OutputFormat::both);
  EXPECT_THROW(parse_format("xml"), ParseError);
}

TEST(Io, BinaryFieldRoundTrip) {
  const fs::path dir = scratch("binary");
  const RealField f = sample(PhaseSpaceGrid({-1, 1, 9}, {0, 3, 8}), [](double q, double p) { return q * p + 1e-17; });
  write_field_binary(dir / "f.json", f, "f");
  const RealField back = read_field_binary(dir / "f.json");
  EXPECT_TRUE(back.grid() == f.grid());
  EXPECT_EQ(back.data(), f.data());
}

TEST(Io, FieldCsvHasOneRowPerNode) {
  const fs::path dir = scratch("csv");
  const RealField f(PhaseSpaceGrid({-1, 1, 8}, {0, 1, 9}), 0.5);
  write_field_csv(dir / "f.csv", f);
  const std::string text = slurp(dir / "f.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 73);
  EXPECT_EQ(text.substr(0, text.find('\n')), "q,p,value");
}

TEST(Scenario, ParsesSectionsAndJsonValues) {
  const Scenario s = parse_scenario(
      "# comment\n[scenario]\nname = \"x\"\nkind = \"time_operator\"\nseed = 4\n"
      "[grid]\nq = [-1, 1, 9]\n[constants]\nhbar = 0.5\n[params]\nstart = [1, 0.5]\n");
  EXPECT_EQ(s.name, "x");
  EXPECT_EQ(s.kind, "time_operator");
  EXPECT_EQ(s.seed, 4u);
  EXPECT_DOUBLE_EQ(s.constants.hbar, 0.5);
  EXPECT_EQ(s.params["start"][1].get<double>(), 0.5);
  EXPECT_EQ(s.grid["q"][2].get<int>(), 9);
}

TEST(Scenario, ParseErrors) {
  EXPECT_THROW(parse_scenario(""), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"nope\"\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"eigenstate\"\n[bogus]\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"eigenstate\"\n[constants]\nplanck = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"eigenstate\"\n[params]\nE = [1,\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = a b\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"eigenstate\"\n[params]\nenergie = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario("[scenario]\nname = \"a\"\nkind = \"eigenstate\"\n[grid]\nx = [0, 1, 8]\n"), ParseError);
}

TEST(Scenario, BundledCatalog) {
  const auto entries = list_scenarios(VANHOVE_TEST_SCENARIO_DIR);
  ASSERT_GE(entries.size(), 7u);
  for (std::size_t k = 1; k < entries.size(); ++k) EXPECT_LT(entries[k - 1].name, entries[k].name);
  for (const CatalogEntry& e : entries) {
    EXPECT_NO_THROW(load_scenario(e.path)) << e.path;
  }
}

TEST(Scenario, RunWritesChecksAndExitCodes) {
  const fs::path out = scratch("run");
  std::ostringstream log;
  const ScenarioOutcome ok =
      run_scenario_file(fs::path(VANHOVE_TEST_SCENARIO_DIR) / "tau_flow.cfg", {out, 1.0, OutputFormat::both}, log);
  EXPECT_EQ(ok.exit_code, 0) << log.str();
  EXPECT_TRUE(fs::exists(out / "tau_flow" / "checks.json"));
  EXPECT_TRUE(fs::exists(out / "tau_flow" / "tau_flow.csv"));
  EXPECT_NE(log.str().find("PASS tau_flow."), std::string::npos);

  std::ofstream(out / "bad.cfg") << "[scenario]\n";
  EXPECT_EQ(run_scenario_file(out / "bad.cfg", {out}, log).exit_code, 2);
  EXPECT_EQ(run_scenario_file(out / "missing.cfg", {out}, log).exit_code, 2);

  const Scenario far = parse_scenario(
      "[scenario]\nname = \"far\"\nkind = \"qubit_measurement\"\n[grid]\nq = [-3, 3, 257]\np = [-0.3, 0.3, 32]\n"
      "[params]\nkappa = 10.0\n");
  EXPECT_EQ(run_scenario(far, {out}, log).exit_code, 3);
}

TEST(Scenario, JsonOnlyFormatSkipsCsv) {
  const fs::path out = scratch("format");
  std::ostringstream log;
  run_scenario_file(fs::path(VANHOVE_TEST_SCENARIO_DIR) / "tau_flow.cfg", {out, 1.0, OutputFormat::json}, log);
  EXPECT_TRUE(fs::exists(out / "tau_flow" / "checks.json"));
  EXPECT_FALSE(fs::exists(out / "tau_flow" / "checks.csv"));
}
