#include "oracles.hpp"

#include "etcon_app/commands.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace etcon;
using namespace etcon::app;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = ETCON_CONFIG_DIR;

RunOptions short_run(const fs::path& out, double t_end = 2.0) {
    RunOptions o;
    o.config = kConfigs / "g1.cfg";
    o.out = out;
    o.overrides = {parse_override("simulation.t_end=" + std::to_string(t_end))};
    return o;
}

int run_quiet(const RunOptions& o) {
    std::ostringstream out, err;
    return cmd_run(o, out, err);
}

const std::vector<std::string> kCsvs{"trajectory.csv", "events.csv", "summary.csv", "run_info.csv", "lyapunov.csv"};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

}  // namespace

TEST_CASE("run writes the outputs directory") {
    const auto dir = testing::scratch_dir("cmd_run") / "out";
    REQUIRE(run_quiet(short_run(dir)) == kExitOk);
    for (const auto& f : kCsvs) CHECK(fs::exists(dir / f));
    CHECK(fs::exists(dir / "manifest.json"));
    for (const auto& p : default_plots()) CHECK(fs::exists(dir / p.file));
    CHECK_FALSE(fs::exists(fs::path(dir.string() + ".partial")));
}

TEST_CASE("run exit codes") {
    const auto root = testing::scratch_dir("cmd_codes");

    SECTION("missing config file") {
        auto o = short_run(root / "a");
        o.config = root / "does_not_exist.cfg";
        CHECK(run_quiet(o) == kExitConfig);
    }
    SECTION("config without a topology") {
        const auto cfg = root / "no_topology.cfg";
        write_file(cfg, R"({"dynamics": {"model": "zero"}, "protocol": {"alpha": 1, "beta": 2, "gamma": 3, "delta": 1},
                            "trigger": {"xi": 1}, "simulation": {"t_end": 1, "h": 0.01},
                            "initial_conditions": {"seed": 1}})");
        auto o = short_run(root / "b");
        o.config = cfg;
        std::ostringstream out, err;
        CHECK(cmd_run(o, out, err) == kExitConfig);
        CHECK(err.str().find("topology") != std::string::npos);
        CHECK_FALSE(fs::exists(root / "b"));
    }
    SECTION("divergence") {
        // a large step on strongly coupled gains blows up
        auto o = short_run(root / "c");
        o.overrides.push_back(parse_override("simulation.h=0.5"));
        o.overrides.push_back(parse_override("protocol.c_initial=100"));
        o.plots = false;
        std::ostringstream out, err;
        CHECK(cmd_run(o, out, err) == kExitDivergence);
        CHECK_FALSE(err.str().empty());
        CHECK(fs::exists(root / "c" / "trajectory.csv"));
    }
}

TEST_CASE("identical configs give byte-identical CSVs") {
    const auto root = testing::scratch_dir("cmd_determinism");
    REQUIRE(run_quiet(short_run(root / "a")) == kExitOk);
    REQUIRE(run_quiet(short_run(root / "b")) == kExitOk);
    for (const auto& f : kCsvs) {
        INFO(f);
        CHECK(testing::slurp(root / "a" / f) == testing::slurp(root / "b" / f));
    }
}

TEST_CASE("seed option changes the initial conditions") {
    const auto root = testing::scratch_dir("cmd_seed");
    auto a = short_run(root / "a", 0.1);
    auto b = short_run(root / "b", 0.1);
    b.seed = 7;
    REQUIRE(run_quiet(a) == kExitOk);
    REQUIRE(run_quiet(b) == kExitOk);
    CHECK(testing::slurp(root / "a" / "trajectory.csv") != testing::slurp(root / "b" / "trajectory.csv"));

    auto c = short_run(root / "c", 0.1);
    c.overrides.push_back(parse_override("seed=7"));
    REQUIRE(run_quiet(c) == kExitOk);
    CHECK(testing::slurp(root / "b" / "trajectory.csv") == testing::slurp(root / "c" / "trajectory.csv"));
}

TEST_CASE("rerunning into an existing directory replaces it") {
    const auto dir = testing::scratch_dir("cmd_replace") / "out";
    fs::create_directories(dir);
    write_file(dir / "stale.txt", "old");
    REQUIRE(run_quiet(short_run(dir, 0.1)) == kExitOk);
    CHECK_FALSE(fs::exists(dir / "stale.txt"));
}

TEST_CASE("plots are regenerated losslessly from the CSVs") {
    const auto dir = testing::scratch_dir("cmd_plot") / "out";
    REQUIRE(run_quiet(short_run(dir)) == kExitOk);
    std::map<std::string, std::string> before;
    for (const auto& p : default_plots()) before[p.file] = testing::slurp(dir / p.file);
    for (const auto& p : default_plots()) fs::remove(dir / p.file);

    std::ostringstream out, err;
    REQUIRE(cmd_plot(dir, out, err) == kExitOk);
    for (const auto& p : default_plots()) {
        INFO(p.file);
        CHECK(testing::slurp(dir / p.file) == before[p.file]);
        CHECK(before[p.file].rfind("<svg", 0) == 0);
    }
    CHECK(cmd_plot(dir / "missing", out, err) == kExitFailure);
}

TEST_CASE("feasibility of the reference set fails, the raised omega passes") {
    const auto root = testing::scratch_dir("cmd_feas");
    std::ostringstream out, err;

    FeasibilityOptions o;
    o.config = kConfigs / "g1.cfg";
    o.out = root / "ref";
    CHECK(cmd_feasibility(o, out, err) == kExitInfeasible);
    CHECK(fs::exists(root / "ref" / "feasibility_report.csv"));

    o.config = kConfigs / "g1_feasible.cfg";
    o.out = root / "ok";
    CHECK(cmd_feasibility(o, out, err) == kExitOk);

    o.config = kConfigs / "g1.cfg";
    o.overrides = {parse_override("lyapunov.varpi=0")};
    o.out = root / "zero";
    CHECK(cmd_feasibility(o, out, err) == kExitInfeasible);
}

TEST_CASE("feasibility grid writes one row per point") {
    const auto root = testing::scratch_dir("cmd_grid");
    FeasibilityOptions o;
    o.config = kConfigs / "g1.cfg";
    o.out = root;
    o.grid = {parse_grid_axis("omega=10,20,40,80")};
    o.jobs = 2;
    std::ostringstream out, err;
    const int code = cmd_feasibility(o, out, err);
    CHECK((code == kExitOk || code == kExitInfeasible));

    std::istringstream csv(testing::slurp(root / "feasibility_report.csv"));
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("grid axis parsing") {
    const auto axis = parse_grid_axis("eta=1,2.5,1e1");
    CHECK(axis.name == "eta");
    CHECK(axis.values == std::vector<double>{1.0, 2.5, 10.0});
    CHECK_THROWS_AS(parse_grid_axis("alpha=1,2"), ConfigError);
    CHECK_THROWS_AS(parse_grid_axis("omega="), ConfigError);
    CHECK_THROWS_AS(parse_grid_axis("omega=1,x"), ConfigError);
    CHECK_THROWS_AS(parse_grid_axis("omega"), ConfigError);
}

TEST_CASE("reference study on shortened configs") {
    const auto root = testing::scratch_dir("cmd_reference");
    const auto cfg_dir = root / "configs";
    fs::create_directories(cfg_dir);
    for (const char* name : {"g1", "g2"}) {
        auto doc = load_config(kConfigs / (std::string(name) + ".cfg")).document;
        doc["simulation"]["t_end"] = 1.0;
        write_file(cfg_dir / (std::string(name) + ".cfg"), doc.dump(2));
    }
    ReferenceOptions o;
    o.config_dir = cfg_dir;
    o.out = root / "study";
    o.jobs = 2;
    std::ostringstream out, err;
    CHECK(cmd_reference_study(o, out, err) == kExitOk);
    for (const char* f : {"reference_report.md", "threshold_d1.svg", "gains_g1.svg", "g1/trajectory.csv",
                          "g2/events.csv", "feasibility_report.csv"}) {
        INFO(f);
        CHECK(fs::exists(o.out / f));
    }
    const auto report = testing::slurp(o.out / "reference_report.md");
    CHECK(report.find("g1") != std::string::npos);
    CHECK(report.find("g2") != std::string::npos);

    o.config_dir = root / "nowhere";
    CHECK(cmd_reference_study(o, out, err) == kExitConfig);
}
