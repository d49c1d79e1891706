#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hopper/csv.hpp"
#include "hopper/scenario.hpp"
#include "hopper/toml.hpp"

using namespace hopper;
namespace fs = std::filesystem;

namespace {

std::string tmpdir() {
  const auto d = fs::temp_directory_path() / "hopper_io_test";
  fs::create_directories(d);
  return d.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("csv round trip with 17 significant digits") {
  const std::string path = tmpdir() + "/t.csv";
  const double v = 0.1 + 0.2;  // not representable exactly
  write_csv(path, {"a", "b"}, {{v, 1.0 / 3.0}, {-1e-300, 2.25}});
  const CsvTable t = read_csv(path);
  REQUIRE(t.header.size() == 2);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == v);          // exact round trip
  CHECK(t.rows[0][1] == 1.0 / 3.0);
  CHECK(t.rows[1][0] == -1e-300);
  CHECK(t.column("b") == 1);
  CHECK(t.column("zz") == -1);
}

TEST_CASE("csv errors carry line and column diagnostics") {
  const std::string path = tmpdir() + "/bad.csv";
  {
    std::ofstream out(path);
    out << "x,y\n1.0,2.0\n3.0,oops\n";
  }
  try {
    read_csv(path);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("'y'") != std::string::npos);
  }
  CHECK_THROWS_AS(read_csv(tmpdir() + "/does_not_exist.csv"), CsvError);
}

TEST_CASE("minimal toml parsing") {
  const auto j = parse_toml(R"(
# comment
top = 3
[a]
x = 1.5e-3        # trailing comment
name = "hop # per"
flag = true
[a.b]
list = [1.0, 2.5, 3]
n = -4
)");
  CHECK(j.at("top").get<long long>() == 3);
  CHECK(j.at("a").at("x").get<double>() == doctest::Approx(1.5e-3));
  CHECK(j.at("a").at("name").get<std::string>() == "hop # per");
  CHECK(j.at("a").at("flag").get<bool>() == true);
  CHECK(j.at("a").at("b").at("list").size() == 3);
  CHECK(j.at("a").at("b").at("n").get<long long>() == -4);

  CHECK_THROWS_AS(parse_toml("key"), TomlError);
  CHECK_THROWS_AS(parse_toml("[unterminated\nx=1"), TomlError);
  CHECK_THROWS_AS(parse_toml("x = \"open"), TomlError);
  CHECK_THROWS_AS(parse_toml("x = what"), TomlError);
}

TEST_CASE("scenario loading from toml and json") {
  const std::string toml_path = tmpdir() + "/scenario.toml";
  {
    std::ofstream out(toml_path);
    out << R"([scenario]
task = "enhanced-hop"
seed = 7
cycles = 12

[robot.estimated]
projected_mass_kg = 1.9

[task]
release_gauge_pa = 150000.0
)";
  }
  const Scenario s = load_scenario(toml_path);
  CHECK(s.task == TaskKind::EnhancedHop);
  CHECK(s.seed == 7);
  CHECK(s.cycles == 12);
  CHECK(s.robot.projected_mass_kg == doctest::Approx(1.9));
  CHECK(s.release_gauge_pa == doctest::Approx(150000.0));
  // untouched defaults survive
  CHECK(s.robot.shank_length_m == doctest::Approx(0.100));
  CHECK(s.pneu.pump.stroke_m == doctest::Approx(0.130));

  // json alternative accepted
  const std::string json_path = tmpdir() + "/scenario.json";
  {
    std::ofstream out(json_path);
    out << R"({"scenario": {"task": "motor-only-max"}})";
  }
  CHECK(load_scenario(json_path).task == TaskKind::MotorOnlyMax);
}

TEST_CASE("scenario rejection lists every invalid field") {
  nlohmann::json doc;
  doc["scenario"]["task"] = "fly-to-the-moon";
  doc["scenario"]["cycles"] = 0;
  doc["sim"]["dt_s"] = -1.0;
  doc["task"]["releases"] = 0;
  doc["typo_section"] = nlohmann::json::object();
  try {
    scenario_from_json(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.problems.size() >= 2);
    const std::string all = e.what();
    CHECK(all.find("task") != std::string::npos);
    CHECK(all.find("typo_section") != std::string::npos);
  }

  nlohmann::json doc2;
  doc2["sim"]["dt_s"] = -1.0;
  doc2["task"]["releases"] = 0;
  try {
    scenario_from_json(doc2);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    // both problems named, not just the first
    bool saw_dt = false, saw_rel = false;
    for (const auto& p : e.problems) {
      if (p.find("dt") != std::string::npos) saw_dt = true;
      if (p.find("releases") != std::string::npos) saw_rel = true;
    }
    CHECK(saw_dt);
    CHECK(saw_rel);
  }
}

TEST_CASE("gauge pressures in the document, absolute inside") {
  nlohmann::json doc;
  doc["pneumatic"]["initial_tank_gauge_pa"] = 50000.0;
  const Scenario s = scenario_from_json(doc);
  CHECK(s.initial_tank().pressure_pa == doctest::Approx(kAtmospherePa + 50000.0));
}

TEST_CASE("format_double round trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-17, 101325.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
