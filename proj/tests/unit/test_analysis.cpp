#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ionchain/errors.hpp"
#include "ionchain/fitting.hpp"
#include "ionchain/scenario.hpp"

using namespace ionchain;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ionchain_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + IONCHAIN_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

}  // namespace

TEST_CASE("power-law fit recovers exact data") {
    std::vector<double> x, y;
    for (int p = 5; p <= 50; p += 5) {
        x.push_back(p);
        y.push_back(3.7 * std::pow(p, -0.816));
    }
    const PowerLawFit f = fit_power_law(x, y);
    CHECK(f.prefactor == doctest::Approx(3.7).epsilon(1e-9));
    CHECK(f.exponent == doctest::Approx(-0.816).epsilon(1e-9));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f(20.0) == doctest::Approx(3.7 * std::pow(20.0, -0.816)).epsilon(1e-9));
    CHECK_THROWS_AS(fit_power_law({1, 2, 3}, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(fit_power_law({1, 2, 3, 4}, {1, -2, 3, 4}), FitError);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.0, 1.0, -2.5, 1e-300, 0.1, 3.141592653589793, 6.02214076e23}) {
        const std::string s = format_number(v);
        CHECK(std::stod(s) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("dotted overrides and config hash") {
    json c = {{"trap", {{"n_ions", 10}}}};
    const std::string h0 = config_hash(c);
    CHECK(h0 == config_hash(json::parse(c.dump())));
    apply_override(c, "trap.n_ions", "12");
    apply_override(c, "tweezers.incident_axis", "y");
    apply_override(c, "modes.periods", "[5, 10]");
    CHECK(c["trap"]["n_ions"] == 12);
    CHECK(c["tweezers"]["incident_axis"] == "y");
    CHECK(c["modes"]["periods"] == json::array({5, 10}));
    CHECK(config_hash(c) != h0);
    CHECK_THROWS_AS(apply_override(c, "", "1"), ConfigError);
}

TEST_CASE("scenario names") {
    for (auto k : {ScenarioKind::equilibrium, ScenarioKind::modes, ScenarioKind::gate, ScenarioKind::cool,
                   ScenarioKind::localcool})
        CHECK(parse_scenario(scenario_name(k)) == k);
    CHECK_THROWS_AS(parse_scenario("anneal"), ConfigError);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("exit");
    CHECK(run_cli("") == 2);
    CHECK(run_cli("anneal") == 2);
    CHECK(run_cli("equilibrium --out " + (dir / "a").string() + " --set trap.n_ions=-3") == 2);
    CHECK(run_cli("equilibrium --out " + (dir / "b").string() + " --set trap.bogus=1") == 2);
    CHECK(run_cli("equilibrium --out " + (dir / "c").string() + " --set trap.n_ions=20 --set trap.length=1e-3"
                  " --set equilibrium.calibrate=sometimes") == 2);
    CHECK(run_cli("equilibrium --preset no_such_preset --out " + (dir / "d").string()) == 2);
    write_file(dir / "broken.json", "{\"trap\": ");
    CHECK(run_cli("equilibrium --config " + (dir / "broken.json").string() + " --out " + (dir / "e").string()) == 2);
    write_file(dir / "wrong.json", R"({"scenario": "gate"})");
    CHECK(run_cli("equilibrium --config " + (dir / "wrong.json").string() + " --out " + (dir / "f").string()) == 2);
    // Radial confinement far too weak for a linear chain: the x modes go unstable.
    write_file(dir / "unstable.json",
               R"({"trap": {"n_ions": 20, "length": 1e-3, "omega_rf_x": 6283.0}, "modes": {"axes": ["x"]}})");
    CHECK(run_cli("modes --config " + (dir / "unstable.json").string() + " --out " + (dir / "g").string()) == 3);
}

TEST_CASE("cli reruns are byte identical") {
    const fs::path dir = scratch("det");
    write_file(dir / "cfg.json", R"({
  "trap": {"n_ions": 40, "length": 8e-4},
  "tweezers": {"period": 10, "frequency_hz": 1e6},
  "modes": {"axes": ["x", "z"], "scan_axis": "z", "periods": [5, 8, 10, 20], "strengths_hz": [5e5]}
})");
    const std::string base = "modes --config " + (dir / "cfg.json").string() + " --out ";
    REQUIRE(run_cli(base + (dir / "r1").string()) == 0);
    REQUIRE(run_cli(base + (dir / "r2").string()) == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(dir / "r1")) {
        const std::string name = e.path().filename().string();
        if (name == "manifest.json") continue;
        CHECK_MESSAGE(slurp(e.path()) == slurp(dir / "r2" / name), name);
        ++compared;
    }
    CHECK(compared == 4);
    const json m = json::parse(slurp(dir / "r1" / "manifest.json"));
    CHECK(m["config_hash"] == json::parse(slurp(dir / "r2" / "manifest.json"))["config_hash"]);
    CHECK(m["config"]["trap"]["n_ions"] == 40);
    CHECK(m["outputs"].size() == 4);
}

TEST_CASE("equilibrium scenario artifacts") {
    const fs::path dir = scratch("eq");
    REQUIRE(run_cli("equilibrium --out " + (dir / "o").string() +
                    " --set trap.n_ions=30 --set trap.length=1e-3 --set equilibrium.bins=10") == 0);
    const json st = json::parse(slurp(dir / "o" / "stats.json"));
    CHECK(st["n_ions"] == 30);
    CHECK(st["grad_norm"].get<double>() < 1e-9);
    std::ifstream pos(dir / "o" / "positions.csv");
    std::string line;
    int rows = -1;
    while (std::getline(pos, line)) ++rows;
    CHECK(rows == 30);
}

TEST_CASE("shipped presets resolve") {
    for (const char* name : {"fig1c", "fig2a", "fig2b", "fig3a", "fig3b", "fig3cd", "fig4", "fig5"}) {
        ScenarioSpec spec;
        spec.preset = name;
        const json c = resolve_config(spec);
        REQUIRE_MESSAGE(c.contains("scenario"), name);
        CHECK_NOTHROW(parse_scenario(c["scenario"].get<std::string>()));
    }
}

TEST_CASE("gate preset runs on the lattice cell") {
    const fs::path dir = scratch("gate");
    REQUIRE(run_cli("gate --preset fig3b --set gate.mu_points=300 --set gate.gate_times_us=[1,2,4,8,16] --out " +
                    (dir / "o").string()) == 0);
    const json b = json::parse(slurp(dir / "o" / "budget.json"));
    CHECK(b["eta_omega_max_fit"]["exponent"].get<double>() < -1.0);
    CHECK(b["doppler_transverse"]["dF_LD"].get<double>() > 0.0);
}
