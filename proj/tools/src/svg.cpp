#include "etcon_app/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace etcon::app {

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

constexpr double kLeft = 70.0;
constexpr double kRight = 140.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double nice_step(double span, int target) {
    const double raw = span / std::max(target, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    const double nice = frac < 1.5 ? 1.0 : frac < 3.0 ? 2.0 : frac < 7.0 ? 5.0 : 10.0;
    return nice * mag;
}

std::string tick_label(double v, double step) {
    const int digits = std::clamp(static_cast<int>(-std::floor(std::log10(step))), 0, 6);
    if (std::abs(v) < step * 1e-9) v = 0.0;
    return fixed(v, digits);
}

struct Frame {
    double x0, x1, y0, y1;
    double px0, px1, py0, py1;

    [[nodiscard]] double sx(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
    [[nodiscard]] double sy(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

void header(std::ostringstream& os, const ChartSpec& spec) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
       << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
       << "</text>\n";
}

void axes(std::ostringstream& os, const ChartSpec& spec, const Frame& f, bool y_ticks) {
    os << "<rect x=\"" << fixed(f.px0) << "\" y=\"" << fixed(f.py0) << "\" width=\"" << fixed(f.px1 - f.px0)
       << "\" height=\"" << fixed(f.py1 - f.py0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double xs = nice_step(f.x1 - f.x0, 8);
    for (double x = std::ceil(f.x0 / xs) * xs; x <= f.x1 + xs * 1e-9; x += xs) {
        const double px = f.sx(x);
        os << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(f.py1) << "\" x2=\"" << fixed(px) << "\" y2=\""
           << fixed(f.py1 + 5) << "\" stroke=\"black\"/>";
        os << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(f.py1 + 18) << "\" text-anchor=\"middle\">"
           << tick_label(x, xs) << "</text>\n";
    }
    if (y_ticks) {
        const double ys = nice_step(f.y1 - f.y0, 6);
        for (double y = std::ceil(f.y0 / ys) * ys; y <= f.y1 + ys * 1e-9; y += ys) {
            const double py = f.sy(y);
            os << "<line x1=\"" << fixed(f.px0 - 5) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(f.px1)
               << "\" y2=\"" << fixed(py) << "\" stroke=\"#dddddd\"/>";
            os << "<text x=\"" << fixed(f.px0 - 8) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">"
               << tick_label(y, ys) << "</text>\n";
        }
    }
    os << "<text x=\"" << fixed((f.px0 + f.px1) / 2) << "\" y=\"" << spec.height - 10 << "\" text-anchor=\"middle\">"
       << escape(spec.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << fixed((f.py0 + f.py1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(spec.y_label) << "</text>\n";
}

}  // namespace

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) {
        const double pad = std::max(std::abs(ymin) * 0.1, 1e-12);
        ymin -= pad;
        ymax += pad;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    const Frame f{xmin, xmax, ymin, ymax, kLeft, spec.width - kRight, kTop, spec.height - kBottom};

    std::ostringstream os;
    header(os, spec);
    axes(os, spec, f, true);

    const auto max_points = static_cast<std::size_t>(std::max(2.0 * (f.px1 - f.px0), 2.0));
    std::size_t color = 0;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const std::size_t len = std::min(s.x.size(), s.y.size());
        const std::size_t stride = std::max<std::size_t>(1, (len + max_points - 1) / max_points);
        const std::string stroke = s.emphasized ? "black" : kPalette[color++ % kPalette.size()];
        const std::string width = s.emphasized ? "2.2" : "1.2";
        std::string points;
        auto flush = [&] {
            if (!points.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\" points=\""
                   << points << "\"/>\n";
                points.clear();
            }
        };
        for (std::size_t k = 0; k < len; k += stride) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
                flush();
                continue;
            }
            points += fixed(f.sx(s.x[k])) + "," + fixed(f.sy(s.y[k])) + " ";
        }
        if (len > 0 && (len - 1) % stride != 0 && std::isfinite(s.x[len - 1]) && std::isfinite(s.y[len - 1])) {
            points += fixed(f.sx(s.x[len - 1])) + "," + fixed(f.sy(s.y[len - 1])) + " ";
        }
        flush();

        const double ly = kTop + 10 + 18.0 * static_cast<double>(si);
        const double lx = spec.width - kRight + 12;
        os << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 22) << "\" y2=\""
           << fixed(ly) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>";
        os << "<text x=\"" << fixed(lx + 28) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string event_raster(const ChartSpec& spec, const std::vector<RasterRow>& rows, double t_min, double t_max) {
    if (t_max <= t_min) t_max = t_min + 1.0;
    const double rows_n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
    const Frame f{t_min, t_max, 0.0, rows_n, kLeft, spec.width - kRight, kTop, spec.height - kBottom};

    std::ostringstream os;
    header(os, spec);
    axes(os, spec, f, false);
    const double band = (f.py1 - f.py0) / rows_n;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double top = f.py0 + band * static_cast<double>(r);
        os << "<text x=\"" << fixed(f.px0 - 8) << "\" y=\"" << fixed(top + band / 2 + 4) << "\" text-anchor=\"end\">"
           << escape(rows[r].label) << "</text>\n";
        std::set<long> columns;
        for (double t : rows[r].times) {
            if (t < t_min || t > t_max) continue;
            columns.insert(std::lround(f.sx(t) * 2.0));  // half-pixel bins
        }
        os << "<g fill=\"" << kPalette[0] << "\">";
        // merge adjacent bins into spans
        auto it = columns.begin();
        while (it != columns.end()) {
            long start = *it, end = *it;
            for (++it; it != columns.end() && *it == end + 1; ++it) end = *it;
            const double x = static_cast<double>(start) / 2.0;
            const double w = std::max(0.5, static_cast<double>(end - start + 1) / 2.0);
            os << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(top + 2) << "\" width=\"" << fixed(w)
               << "\" height=\"" << fixed(band - 4) << "\"/>";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace etcon::app
