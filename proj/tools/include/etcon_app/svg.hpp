#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace etcon::app {

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 900;
    int height = 480;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool emphasized = false;  // drawn thicker and dark (e.g. the leader)
};

/// Multi-series line chart. NaN samples break the polyline. Series longer
/// than the plot width are thinned to keep the file small.
[[nodiscard]] std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);

struct RasterRow {
    std::string label;
    std::vector<double> times;
};

/// One row per agent; every event draws a tick, ticks falling in the same
/// pixel column are merged into one.
[[nodiscard]] std::string event_raster(const ChartSpec& spec, const std::vector<RasterRow>& rows, double t_min,
                                       double t_max);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace etcon::app
