#pragma once

#include "etcon/analysis.hpp"
#include "etcon/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace etcon::app {

/// Shortest round-trip decimal form; identical input gives identical text.
[[nodiscard]] std::string format_number(double value);

/// Long format: t, agent_id, x, v, w, c, d, u. Leader rows use agent_id 0 and
/// leave w, c, d, u empty. Every `stride`-th grid point plus the last one.
void write_trajectory_csv(const RunRecord& record, const std::filesystem::path& path, int stride = 1);

/// t, agent_id, x_broadcast, d_value
void write_events_csv(const RunRecord& record, const std::filesystem::path& path);

/// One row per follower with event and tracking metrics.
void write_summary_csv(const RunRecord& record, const ConsensusMetrics& metrics, const std::filesystem::path& path);

/// key, value pairs describing the run (status, generator, seed, h, ...).
void write_run_info_csv(const RunRecord& record, const std::string& name, const std::filesystem::path& path);

struct FeasibilityRow {
    std::string label;
    LyapunovParams params;
    FeasibilityReport report;
};

void write_feasibility_csv(const std::vector<FeasibilityRow>& rows, const std::filesystem::path& path);

/// t, V (every `stride`-th point plus the last).
void write_lyapunov_csv(const LyapunovTrace& trace, const std::filesystem::path& path, int stride = 1);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] int column(const std::string& name) const;  // -1 when absent
    /// Numeric column; empty cells become NaN. Throws when the column is absent.
    [[nodiscard]] std::vector<double> numbers(const std::string& name) const;
};

/// Plain comma-separated reader (no quoting), first line is the header.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

}  // namespace etcon::app
