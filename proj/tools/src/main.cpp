#include "etcon_app/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

#ifndef ETCON_CONFIG_DIR
#define ETCON_CONFIG_DIR "configs"
#endif

namespace {

std::vector<etcon::app::Override> to_overrides(const std::vector<std::string>& raw) {
    std::vector<etcon::app::Override> out;
    out.reserve(raw.size());
    for (const auto& s : raw) out.push_back(etcon::app::parse_override(s));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace etcon::app;

    CLI::App app{"Event-triggered leader-following consensus simulator"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::vector<std::string> overrides;
    std::vector<std::string> grid;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string config_dir = ETCON_CONFIG_DIR;

    auto* run = app.add_subcommand("run", "simulate one experiment and write its outputs directory");
    run->add_option("--config", config, "experiment config")->required();
    run->add_option("--out", out, "outputs directory")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override initial_conditions.seed");
    run->add_option("--override", overrides, "key.path=value");
    bool no_plots = false;
    run->add_flag("--no-plots", no_plots, "skip SVG rendering");

    auto* feas = app.add_subcommand("feasibility", "check the Lyapunov certificate for a config");
    feas->add_option("--config", config, "experiment config")->required();
    feas->add_option("--out", out, "directory for feasibility_report.csv");
    feas->add_option("--override", overrides, "key.path=value");
    feas->add_option("--grid", grid, "name=v1,v2,... (mu, varpi, eta, omega); repeatable");
    feas->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* ref = app.add_subcommand("reference-study", "run the bundled g1 and g2 experiments");
    ref->add_option("--out", out, "study directory")->required();
    ref->add_option("--config-dir", config_dir, "directory holding g1.cfg and g2.cfg");
    ref->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "regenerate figures from an outputs directory");
    plot->add_option("dir", out, "outputs directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            RunOptions o;
            o.config = config;
            o.out = out;
            o.overrides = to_overrides(overrides);
            if (*seed_opt) o.seed = seed;
            o.plots = !no_plots;
            return cmd_run(o, std::cout, std::cerr);
        }
        if (*feas) {
            FeasibilityOptions o;
            o.config = config;
            if (!out.empty()) o.out = out;
            o.overrides = to_overrides(overrides);
            for (const auto& g : grid) o.grid.push_back(parse_grid_axis(g));
            o.jobs = jobs;
            return cmd_feasibility(o, std::cout, std::cerr);
        }
        if (*ref) return cmd_reference_study({config_dir, out, jobs}, std::cout, std::cerr);
        return cmd_plot(out, std::cout, std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
