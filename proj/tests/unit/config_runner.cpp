#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "qdspin/bundles.hpp"
#include "qdspin/config.hpp"
#include "qdspin/runner.hpp"
#include "qdspin/units.hpp"

using namespace qdspin;

namespace {

const std::string kBase = R"(system:
  species: XM
  nu0: 315.97 THz
  delta_g: 10 GHz
  delta_e: 4 GHz
  gamma_0: 3.07 ns^-1
  gamma_x: 0.243 ns^-1
  asymmetry: 21.1
  p_sat: 10 nW
noise:
  sigma: 140 MHz
  seed: 5
experiment:
  kind: pumping
  pump_power: 50 nW
  probe_power: 10 nW
)";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string problems_of(const std::string& text) {
  try {
    parse_config(text, "t.yaml");
  } catch (const ConfigError& e) {
    std::string all;
    for (const auto& p : e.problems()) all += p + "\n";
    return all;
  }
  return "";
}

}  // namespace

TEST_CASE("every bundle loads") {
  CHECK(bundled_configs().size() >= 8);
  for (const auto& [name, text] : bundled_configs()) {
    CAPTURE(name);
    CHECK_NOTHROW(bundled_config(name));
  }
  CHECK_THROWS(bundled_config("no_such_bundle"));
}

TEST_CASE("quantities convert to internal units") {
  const auto cfg = parse_config(kBase, "t.yaml");
  CHECK(cfg.system.scheme.delta_g() == doctest::Approx(units::ghz_to_angular(10.0)));
  CHECK(cfg.system.rates.gamma_0() == doctest::Approx(3.07));
  CHECK(cfg.noise.diffusion.sigma == doctest::Approx(units::mhz_to_angular(140.0)));
  CHECK(cfg.noise.diffusion.seed == 5);
  CHECK(cfg.pumping.probe_power == doctest::Approx(10.0));
  CHECK(split_quantity("2.5 GHz") == std::pair<double, std::string>{2.5, "GHz"});
  const auto psat = parse_config(replaced(kBase, "probe_power: 10 nW", "probe_power: 2 Psat"), "t.yaml");
  CHECK(psat.pumping.probe_power == doctest::Approx(20.0));
}

TEST_CASE("config errors name the offending key") {
  CHECK(problems_of(replaced(kBase, "gamma_x: 0.243 ns^-1", "gamma_x: -0.243 ns^-1")).find("gamma_x") !=
        std::string::npos);
  CHECK(problems_of(replaced(kBase, "delta_g: 10 GHz", "delta_g: 10 nW")).find("delta_g") != std::string::npos);
  CHECK(problems_of(replaced(kBase, "  seed: 5\n", "  seed: 5\n  bogus: 1\n")).find("bogus") !=
        std::string::npos);
  CHECK(problems_of(replaced(kBase, "  seed: 5\n", "  seed: 5\n  seed: 6\n")).find("seed") != std::string::npos);
  CHECK(problems_of(replaced(kBase, "  gamma_0: 3.07 ns^-1\n", "")).find("gamma_0") != std::string::npos);
  CHECK(problems_of(replaced(kBase, "kind: pumping", "kind: teleport")).find("kind") != std::string::npos);
  CHECK(problems_of(replaced(kBase, "delta_g: 10 GHz", "delta_g: 10 GHz\n  bogus: 1")).find("line") !=
        std::string::npos);
  CHECK(problems_of(kBase).empty());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("sweeps") {
  CHECK(Sweep{1.0, 100.0, 3, true}.values() == std::vector<double>{1.0, 10.0, 100.0});
  CHECK(Sweep{0.0, 1.0, 3, false}.values() == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("tables and outputs") {
  Table t{"demo", {}, {}};
  t.add_column("x_ns", {0.1, 2.0});
  t.add_column("y", {1.0 / 3.0, -4.0});
  CHECK(t.rows() == 2);
  CHECK(t.to_csv() == "x_ns,y\n0.10000000000000001,0.33333333333333331\n2,-4\n");
  const auto dir = std::filesystem::temp_directory_path() / "qdspin_unit_outputs";
  std::filesystem::remove_all(dir);
  RunOutput out;
  out.name = "demo";
  out.tables = {t};
  out.summary = {{"k", 1}};
  write_outputs(out, dir, "csv");
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const auto [header, cols] = read_csv(dir / "demo.csv");
  CHECK(header == std::vector<std::string>{"x_ns", "y"});
  CHECK(cols[1][0] == 1.0 / 3.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("runs are deterministic and carry a manifest") {
  const auto cfg = bundled_config("xm_transmission");
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg, {2, std::nullopt});
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].to_csv() == b.tables[i].to_csv());
  CHECK(a.summary.dump() == b.summary.dump());
  CHECK(a.manifest.rng == std::string("philox4x64-10"));
  CHECK(a.manifest.config_hash.size() == 16);
  CHECK_FALSE(a.manifest.reproducible_json().contains("duration_seconds"));
  const auto c = run_scenario(cfg, {1, 99});
  CHECK(c.manifest.seed == 99);
}

TEST_CASE("unknown figures list the known ones") {
  CHECK_THROWS_WITH_AS(reproduce("fig9"), doctest::Contains("fig2"), std::invalid_argument);
  CHECK(known_figures().size() == 5);
}
