#include "gpe/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "testing.hpp"

namespace gpe {
namespace {

namespace fs = std::filesystem;

const std::string kFixtures = std::string(GPE_SOURCE_DIR) + "/fixtures";

// Writes `config` into a fresh directory next to copies of the fixture
// potentials and returns the config path.
std::string stage(const std::string& tag, const nlohmann::json& config) {
  const std::string dir = testing::temp_dir(tag);
  for (const char* f : {"demo_potential.json", "zero_potential.json"})
    fs::copy_file(kFixtures + "/" + f, dir + "/" + f);
  testing::write_text(dir + "/config.json", config.dump(2));
  return dir + "/config.json";
}

int cli(const std::string& sub, const std::string& config, const std::string& out,
        const std::string& extra = "") {
  const std::string cmd = std::string(GPE_CLI) + " " + sub + " --config " + config + " --out " + out +
                          (extra.find("--workers") == std::string::npos ? " --workers 1 " : " ") + extra +
                          " > /dev/null 2>&1";
  return testing::run_command(cmd);
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

nlohmann::json base_solve(const std::string& potential = "demo_potential.json") {
  return {{"command", "solve"}, {"potential", potential}, {"k", 30.0},
          {"nu", {0.31, 0.52, 0.79}}, {"sigma", 0.01}, {"seed", 1}};
}

TEST(Parse, UnknownFieldsAndTypes) {
  EXPECT_THROW(parse_config({{"potential", "x"}, {"bogus", 1}}, ""), ConfigError);
  EXPECT_THROW(parse_config({{"potential", "x"}, {"A", {{"modulus", 1}, {"angle", 0}}}}, ""), ConfigError);
  EXPECT_THROW(parse_config({{"potential", "x"}, {"k", "thirty"}}, ""), ConfigError);
  EXPECT_THROW(parse_config({{"potential", "x"}, {"nodes", 6.5}}, ""), ConfigError);
  EXPECT_THROW(parse_config({{"command", "plot"}}, ""), ConfigError);
  EXPECT_THROW(parse_config({{"seed", -3}}, ""), ConfigError);
  EXPECT_EQ(parse_config({{"seed", 3}}, "").seed, 3u);
  EXPECT_THROW(parse_config(nlohmann::json::array(), ""), ConfigError);
}

TEST(Parse, ResolvesPathsAndNormalisesDirection) {
  const auto c = parse_config({{"potential", "v.json"}, {"nu", {0.0, 3.0, 4.0}}, {"command", "nonres-scan"}}, "/data/run");
  EXPECT_EQ(c.potential, "/data/run/v.json");
  ASSERT_TRUE(c.nu);
  EXPECT_DOUBLE_EQ((*c.nu)[1], 0.6);
  EXPECT_DOUBLE_EQ((*c.nu)[2], 0.8);
  EXPECT_EQ(c.command, Command::Scan);
  const auto abs = parse_config({{"potential", "/abs/v.json"}}, "/data/run");
  EXPECT_EQ(abs.potential, "/abs/v.json");
}

TEST(Parse, ValidationGates) {
  auto c = parse_config(base_solve(), "");
  EXPECT_NO_THROW(c.validate());
  c.sigma = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = parse_config(base_solve(), "");
  c.command = Command::Iso;
  c.samples = 50;
  EXPECT_THROW(c.validate(), ConfigError);
  c = parse_config(base_solve(), "");
  c.nu.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  c.t = Vec3{0.1, 0.2, 0.3};
  EXPECT_THROW(c.validate(), ConfigError);  // t without j
  c.j = Frequency{30, 0, 0};
  EXPECT_NO_THROW(c.validate());
  c.t = Vec3{1.2, 0.2, 0.3};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Cli, SolveDemoWritesReports) {
  const auto cfg = stage("solve", base_solve());
  const std::string out = fs::path(cfg).parent_path() / "out";
  ASSERT_EQ(cli("solve", cfg, out), 0);
  for (const char* f : {"solution.json", "steps.csv", "nonres.json"}) EXPECT_TRUE(fs::exists(out + "/" + f)) << f;
  const auto rows = csv_rows(testing::read_file(out + "/steps.csv"));
  ASSERT_GE(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "m");
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
  const auto sol = nlohmann::json::parse(testing::read_file(out + "/solution.json"));
  EXPECT_TRUE(sol.at("fixed_point").at("converged").get<bool>());
  EXPECT_EQ(sol.at("config").at("k").get<double>(), 30.0);
  const auto nr = nlohmann::json::parse(testing::read_file(out + "/nonres.json"));
  EXPECT_TRUE(nr.at("admissible").get<bool>());
  EXPECT_TRUE(nr.contains("config"));
}

TEST(Cli, FreeSolveHasEmptyPeriodicPart) {
  const auto cfg = stage("free", base_solve("zero_potential.json"));
  const std::string out = fs::path(cfg).parent_path() / "out";
  ASSERT_EQ(cli("solve", cfg, out), 0);
  const auto sol = nlohmann::json::parse(testing::read_file(out + "/solution.json")).at("solution");
  EXPECT_TRUE(sol.at("u_tilde").empty());
  EXPECT_DOUBLE_EQ(sol.at("lambda").get<double>(), sol.at("p2").get<double>() + 0.01);
}

TEST(Cli, ConfigErrorsExitOneWithoutOutputs) {
  auto bad_pot = base_solve("broken.json");
  const auto cfg = stage("bad", bad_pot);
  const fs::path dir = fs::path(cfg).parent_path();
  testing::write_text(dir / "broken.json", "[{\"q\": [1, 0], \"re\": 1.0}]");
  EXPECT_EQ(cli("solve", cfg, dir / "out1"), 1);
  EXPECT_FALSE(fs::exists(dir / "out1"));

  testing::write_text(dir / "broken.json", "not json");
  EXPECT_EQ(cli("solve", cfg, dir / "out2"), 1);
  EXPECT_FALSE(fs::exists(dir / "out2"));

  const auto missing = stage("missing", base_solve("absent.json"));
  EXPECT_EQ(cli("scan", missing, dir / "out3"), 1);
  EXPECT_FALSE(fs::exists(dir / "out3"));

  auto few = base_solve();
  few["samples"] = 50;
  EXPECT_EQ(cli("iso", stage("few", few), dir / "out4"), 1);
  EXPECT_FALSE(fs::exists(dir / "out4"));

  auto unknown = base_solve();
  unknown["colour"] = "blue";
  EXPECT_EQ(cli("solve", stage("unknown", unknown), dir / "out5"), 1);

  EXPECT_EQ(cli("solve", (dir / "nope.json").string(), dir / "out6"), 1);
  EXPECT_EQ(testing::run_command(std::string(GPE_CLI) + " solve > /dev/null 2>&1"), 1);
  EXPECT_EQ(testing::run_command(std::string(GPE_CLI) + " > /dev/null 2>&1"), 1);
}

TEST(Cli, ResonantPointExitsTwo) {
  // p and p - (0, 1, 0) are degenerate.
  nlohmann::json c{{"potential", "zero_potential.json"}, {"t", {0.5, 0.5, 0.25}}, {"j", {20, 0, 0}}};
  const auto cfg = stage("resonant", c);
  const fs::path out = fs::path(cfg).parent_path() / "out";
  EXPECT_EQ(cli("solve", cfg, out), 2);
  const auto nr = nlohmann::json::parse(testing::read_file(out / "nonres.json"));
  EXPECT_FALSE(nr.at("admissible").get<bool>());
}

TEST(Cli, FreeIsoHasZeroDeviation) {
  nlohmann::json c{{"potential", "zero_potential.json"}, {"k", 20.0}, {"j_max", 2.0},
                   {"directions", 40}, {"samples", 100}};
  const auto cfg = stage("iso", c);
  const fs::path out = fs::path(cfg).parent_path() / "out";
  ASSERT_EQ(cli("iso", cfg, out), 0);
  const auto rows = csv_rows(testing::read_file(out / "surface.csv"));
  ASSERT_EQ(rows.size(), 41u);
  EXPECT_EQ(rows[0][4], "h");
  int passed = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][7] != "1") continue;
    ++passed;
    EXPECT_LE(std::abs(std::stod(rows[i][4])), 1e-12);
  }
  EXPECT_GE(passed, 38);
  const auto m = nlohmann::json::parse(testing::read_file(out / "measure.json"));
  EXPECT_GT(m.at("measure").at("pass_fraction").get<double>(), 0.95);
}

TEST(Cli, FreeScanPassesAlmostEverywhere) {
  nlohmann::json c{{"potential", "zero_potential.json"}, {"k", 30.0}, {"directions", 100}};
  const auto cfg = stage("scan", c);
  const fs::path out = fs::path(cfg).parent_path() / "out";
  ASSERT_EQ(cli("scan", cfg, out), 0);
  const auto rows = csv_rows(testing::read_file(out / "scan.csv"));
  ASSERT_EQ(rows.size(), 101u);
  int pass = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) pass += rows[i][3] == "1";
  EXPECT_GE(pass, 85);
}

TEST(Cli, ShippedIsoFixtureMatchesGolden) {
  const fs::path out = fs::path(testing::temp_dir("golden")) / "out";
  ASSERT_EQ(cli("iso", kFixtures + "/iso.json", out.string(), "--no-timestamp"), 0);
  const auto m = nlohmann::json::parse(testing::read_file(out / "measure.json")).at("measure");
  const auto golden = nlohmann::json::parse(testing::read_file(kFixtures + "/iso_golden.json"));
  const double p = m.at("pass_fraction").get<double>();
  EXPECT_NEAR(p, golden.at("pass_fraction").get<double>(), m.at("confidence_halfwidth").get<double>() + 1e-12);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto cfg = stage("determinism", base_solve());
  const fs::path dir = fs::path(cfg).parent_path();
  ASSERT_EQ(cli("solve", cfg, dir / "a", "--no-timestamp"), 0);
  ASSERT_EQ(cli("solve", cfg, dir / "b", "--no-timestamp --workers 2"), 0);
  for (const char* f : {"solution.json", "steps.csv", "nonres.json"})
    EXPECT_EQ(testing::read_file(dir / "a" / f), testing::read_file(dir / "b" / f)) << f;
  ASSERT_EQ(cli("solve", cfg, dir / "c"), 0);
  EXPECT_NE(testing::read_file(dir / "c" / "steps.csv").find("# generated: "), std::string::npos);
  EXPECT_EQ(testing::read_file(dir / "a" / "steps.csv").find("# generated: "), std::string::npos);
}

TEST(Cli, FlagsOverrideFile) {
  auto c = base_solve();
  c["out"] = "ignored";
  c["seed"] = 1;
  const auto cfg = stage("flags", c);
  const fs::path dir = fs::path(cfg).parent_path();
  ASSERT_EQ(cli("solve", cfg, dir / "chosen", "--seed 9 --no-timestamp"), 0);
  EXPECT_FALSE(fs::exists(dir / "ignored"));
  const auto sol = nlohmann::json::parse(testing::read_file(dir / "chosen" / "solution.json"));
  EXPECT_EQ(sol.at("config").at("seed").get<int>(), 9);
}

}  // namespace
}  // namespace gpe
