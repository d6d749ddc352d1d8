#pragma once

#include "etcon_app/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace etcon::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDivergence = 3,
    kExitInfeasible = 4,
};

/// One figure of an experiment directory, rendered from its CSVs.
struct PlotSpec {
    std::string file;
    std::string title;
    std::string source;    // csv the figure is drawn from
    std::string quantity;  // column, or "events"
    std::string x_label;
    std::string y_label;
};

[[nodiscard]] const std::vector<PlotSpec>& default_plots();

/// Regenerates every SVG of an output directory from its CSV files only.
/// Returns the files written.
std::vector<std::filesystem::path> render_plots(const std::filesystem::path& dir);

struct RunOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::vector<Override> overrides;
    std::optional<std::uint64_t> seed;
    bool plots = true;
};

struct RunOutcome {
    ExperimentConfig experiment;
    RunRecord record;
    ConsensusMetrics metrics;
    std::optional<LyapunovTrace> lyapunov;
};

/// Loads the config, simulates, and writes the outputs directory (staged next
/// to the target and renamed into place). Throws ConfigError.
[[nodiscard]] RunOutcome execute_run(const RunOptions& opts);

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

struct FeasibilityOptions {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::vector<Override> overrides;
    std::vector<GridAxis> grid;
    int jobs = 1;
};

/// "omega=10,20,40,80"
[[nodiscard]] GridAxis parse_grid_axis(const std::string& spec);

/// Exit 0 when the configured point passes (grid mode: when any point
/// passes), kExitInfeasible otherwise.
int cmd_feasibility(const FeasibilityOptions& opts, std::ostream& out, std::ostream& err);

struct ReferenceOptions {
    std::filesystem::path config_dir;
    std::filesystem::path out;
    int jobs = 1;
};

/// Reference tail-error thresholds used in the study report.
inline constexpr double kTailPositionBound = 0.05;
inline constexpr double kTailVelocityBound = 0.1;

/// Runs the bundled g1/g2 configs with one shared parameter set and writes a
/// combined report plus cross-topology figures.
int cmd_reference_study(const ReferenceOptions& opts, std::ostream& out, std::ostream& err);

int cmd_plot(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace etcon::app
