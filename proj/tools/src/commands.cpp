#include "etcon_app/commands.hpp"

#include "etcon_app/csv.hpp"
#include "etcon_app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace etcon::app {

namespace fs = std::filesystem;

const std::vector<PlotSpec>& default_plots() {
    static const std::vector<PlotSpec> plots{
        {"positions.svg", "Positions of the leader and followers", "trajectory.csv", "x", "t [s]", "x"},
        {"velocities.svg", "Velocities of the leader and followers", "trajectory.csv", "v", "t [s]", "v"},
        {"tracking_errors.svg", "Position tracking errors x_i - x_0", "trajectory.csv", "x_error", "t [s]",
         "x_i - x_0"},
        {"gains.svg", "Adaptive coupling gains c_i(t)", "trajectory.csv", "c", "t [s]", "c_i"},
        {"thresholds.svg", "Adaptive trigger thresholds d_i(t)", "trajectory.csv", "d", "t [s]", "d_i"},
        {"events.svg", "Broadcast events per agent", "events.csv", "events", "t [s]", "agent"},
        {"lyapunov.svg", "Lyapunov function V(t)", "lyapunov.csv", "V", "t [s]", "V"},
    };
    return plots;
}

namespace {

/// Per-agent series of one trajectory column, keyed by agent id (0 = leader).
std::map<int, Series> trajectory_series(const CsvTable& table, const std::string& column) {
    const auto t = table.numbers("t");
    const auto id = table.numbers("agent_id");
    const std::string col = table.column(column) >= 0 ? column : column + "_1";
    const auto values = table.numbers(col);
    std::map<int, Series> out;
    for (std::size_t r = 0; r < t.size(); ++r) {
        const int agent = static_cast<int>(id[r]);
        auto& s = out[agent];
        s.x.push_back(t[r]);
        s.y.push_back(values[r]);
    }
    for (auto& [agent, s] : out) {
        s.label = agent == 0 ? "leader" : "agent " + std::to_string(agent);
        s.emphasized = agent == 0;
    }
    return out;
}

std::vector<Series> followers_only(std::map<int, Series> all) {
    std::vector<Series> out;
    for (auto& [agent, s] : all) {
        if (agent != 0) out.push_back(std::move(s));
    }
    return out;
}

std::vector<Series> leader_last(std::map<int, Series> all) {
    std::vector<Series> out = followers_only(all);
    if (all.count(0)) out.push_back(std::move(all[0]));
    return out;
}

}  // namespace

std::vector<fs::path> render_plots(const fs::path& dir) {
    std::vector<fs::path> written;
    std::optional<CsvTable> traj;
    if (fs::exists(dir / "trajectory.csv")) traj = read_csv(dir / "trajectory.csv");

    double t_min = 0.0, t_max = 1.0;
    if (traj && !traj->rows.empty()) {
        const auto t = traj->numbers("t");
        t_min = *std::min_element(t.begin(), t.end());
        t_max = *std::max_element(t.begin(), t.end());
    }

    for (const auto& spec : default_plots()) {
        const fs::path src = dir / spec.source;
        if (!fs::exists(src)) continue;
        const ChartSpec chart{spec.title, spec.x_label, spec.y_label};
        std::string svg;
        if (spec.quantity == "events") {
            const auto table = read_csv(src);
            const auto t = table.numbers("t");
            const auto id = table.numbers("agent_id");
            int agents = 0;
            for (double a : id) agents = std::max(agents, static_cast<int>(a));
            std::vector<RasterRow> rows(static_cast<std::size_t>(agents));
            for (int i = 0; i < agents; ++i) rows[static_cast<std::size_t>(i)].label = "agent " + std::to_string(i + 1);
            for (std::size_t r = 0; r < t.size(); ++r) {
                rows[static_cast<std::size_t>(id[r]) - 1].times.push_back(t[r]);
            }
            svg = event_raster(chart, rows, t_min, t_max);
        } else if (spec.quantity == "V") {
            const auto table = read_csv(src);
            svg = line_chart(chart, {Series{"V", table.numbers("t"), table.numbers("V"), true}});
        } else if (spec.quantity == "x_error") {
            auto all = trajectory_series(*traj, "x");
            const Series leader = all.at(0);
            std::vector<Series> errors = followers_only(std::move(all));
            for (auto& s : errors) {
                for (std::size_t k = 0; k < s.y.size() && k < leader.y.size(); ++k) s.y[k] -= leader.y[k];
            }
            svg = line_chart(chart, errors);
        } else if (spec.quantity == "c" || spec.quantity == "d") {
            svg = line_chart(chart, followers_only(trajectory_series(*traj, spec.quantity)));
        } else {
            svg = line_chart(chart, leader_last(trajectory_series(*traj, spec.quantity)));
        }
        write_text(dir / spec.file, svg);
        written.push_back(dir / spec.file);
    }
    return written;
}

namespace {

void write_manifest(const fs::path& dir, const std::string& name, const fs::path& config, const fs::path& out) {
    nlohmann::json m;
    m["name"] = name;
    m["config_path"] = config.string();
    m["outputs_dir"] = out.string();
    m["plots"] = nlohmann::json::array();
    for (const auto& p : default_plots()) {
        if (p.source == "lyapunov.csv" && !fs::exists(dir / p.source)) continue;
        m["plots"].push_back({{"file", p.file}, {"title", p.title}, {"source", p.source}, {"series", p.quantity},
                              {"x_label", p.x_label}, {"y_label", p.y_label}});
    }
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

/// Writes into "<out>.partial" and renames it over `out` once complete.
template <class Fn>
void staged_directory(const fs::path& out, Fn&& fill) {
    const fs::path target = out.has_filename() ? out : out.parent_path();
    fs::path staging = target;
    staging += ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging);
    fill(staging);
    fs::remove_all(target);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::rename(staging, target);
}

void print_metrics(std::ostream& os, const RunOutcome& r) {
    const auto& m = r.metrics;
    os << "run '" << r.experiment.name << "': "
       << (r.record.status == RunStatus::Completed ? "completed" : "DIVERGED") << ", " << r.record.length()
       << " grid points, seed " << r.record.seed << "\n";
    os << "  agent  events  fraction   tail|x-x0|   tail|v-v0|   c_final     max|dc/dt|tail\n";
    for (int i = 0; i < r.record.n_followers; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        os << "  " << std::setw(5) << (i + 1) << "  " << std::setw(6) << m.event_counts[idx] << "  " << std::fixed
           << std::setprecision(4) << std::setw(8) << m.triggered_fraction[idx] << std::scientific
           << std::setprecision(3) << "  " << std::setw(11) << m.tail_position_error(i) << "  " << std::setw(11)
           << m.tail_velocity_error(i) << "  " << std::setw(10) << m.c_final(i) << "  " << std::setw(10)
           << m.c_rate_tail_max(i) << "\n";
    }
    os << std::defaultfloat;
    if (r.lyapunov) {
        os << "  lyapunov: " << (r.lyapunov->monotone() ? "non-increasing" : "INCREASES") << " (max step increase "
           << r.lyapunov->max_increase << ", tolerance " << r.lyapunov->tolerance << ", "
           << r.lyapunov->violations.size() << " violations)\n";
    }
    if (!r.record.diagnostic.empty()) os << "  diagnostic: " << r.record.diagnostic << "\n";
}

}  // namespace

RunOutcome execute_run(const RunOptions& opts) {
    auto overrides = opts.overrides;
    if (opts.seed) overrides.push_back(Override{"initial_conditions.seed", std::to_string(*opts.seed)});

    RunOutcome r;
    r.experiment = load_config(opts.config, overrides);
    r.record = run(r.experiment.sim);
    r.metrics = consensus_metrics(r.record);
    if (r.experiment.lyapunov) {
        const auto& lp = *r.experiment.lyapunov;
        const auto& sim = r.experiment.sim;
        r.lyapunov = lyapunov_trace(r.record, lp, sim.protocol, sim.xi, resolved_d_hat(lp, sim.d_initial));
    }

    staged_directory(opts.out, [&](const fs::path& dir) {
        const int stride = r.experiment.trajectory_stride;
        write_trajectory_csv(r.record, dir / "trajectory.csv", stride);
        write_events_csv(r.record, dir / "events.csv");
        write_summary_csv(r.record, r.metrics, dir / "summary.csv");
        write_run_info_csv(r.record, r.experiment.name, dir / "run_info.csv");
        if (r.lyapunov) write_lyapunov_csv(*r.lyapunov, dir / "lyapunov.csv", stride);
        write_manifest(dir, r.experiment.name, opts.config, opts.out);
        if (opts.plots) render_plots(dir);
    });
    return r;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const auto r = execute_run(opts);
        print_metrics(out, r);
        out << "outputs written to " << opts.out.string() << "\n";
        if (r.record.status == RunStatus::Diverged) {
            err << "error: " << r.record.diagnostic << "\n";
            return kExitDivergence;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return kExitConfig;
    }
}

GridAxis parse_grid_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--grid", "expected name=v1,v2,...");
    GridAxis axis;
    axis.name = spec.substr(0, eq);
    if (axis.name != "mu" && axis.name != "varpi" && axis.name != "eta" && axis.name != "omega") {
        throw ConfigError("--grid", "unknown axis '" + axis.name + "' (mu, varpi, eta, omega)");
    }
    std::istringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            axis.values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--grid", "'" + item + "' is not a number");
        }
    }
    if (axis.values.empty()) throw ConfigError("--grid", "axis '" + axis.name + "' has no values");
    return axis;
}

namespace {

void print_feasibility(std::ostream& os, const FeasibilityRow& row) {
    const auto& r = row.report;
    os << row.label << ": " << (r.passed ? "PASS" : "FAIL") << "  lambda_min(H)=" << r.lambda_min_h
       << "  lambda_min(Omega)=" << r.lambda_min_omega << "  lambda_max(Pi)=" << r.lambda_max_pi
       << "  kappa=" << r.kappa << "\n";
    for (const auto& v : r.violations) os << "    violation: " << v << "\n";
    for (const auto& n : r.checks.notes) os << "    note: " << n << "\n";
}

std::string grid_label(const std::vector<GridAxis>& axes, const LyapunovParams& p) {
    std::string label;
    for (const auto& a : axes) {
        const double v = a.name == "mu" ? p.mu : a.name == "varpi" ? p.varpi : a.name == "eta" ? p.eta : p.omega;
        label += (label.empty() ? "" : " ") + a.name + "=" + format_number(v);
    }
    return label;
}

}  // namespace

int cmd_feasibility(const FeasibilityOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const auto exp = load_config(opts.config, opts.overrides);
        if (!exp.lyapunov) throw ConfigError("lyapunov", "required field missing");
        const auto& sim = exp.sim;
        std::vector<FeasibilityRow> rows;
        if (opts.grid.empty()) {
            rows.push_back({"config", *exp.lyapunov,
                            check_feasibility(*exp.lyapunov, sim.protocol, sim.topology, sim.d_initial)});
        } else {
            for (auto& gp : grid_search(*exp.lyapunov, sim.protocol, sim.topology, sim.d_initial, opts.grid, opts.jobs)) {
                rows.push_back({grid_label(opts.grid, gp.params), gp.params, gp.report});
            }
        }
        fs::create_directories(opts.out);
        write_feasibility_csv(rows, opts.out / "feasibility_report.csv");
        bool any = false;
        for (const auto& row : rows) {
            print_feasibility(out, row);
            any = any || row.report.passed;
        }
        out << "report written to " << (opts.out / "feasibility_report.csv").string() << "\n";
        return any ? kExitOk : kExitInfeasible;
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return kExitConfig;
    }
}

int cmd_plot(const fs::path& dir, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(dir)) {
        err << "error: " << dir.string() << " is not a directory\n";
        return kExitFailure;
    }
    try {
        for (const auto& p : render_plots(dir)) out << "wrote " << p.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int cmd_reference_study(const ReferenceOptions& opts, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> names{"g1", "g2"};
    std::vector<std::optional<RunOutcome>> results(names.size());
    std::vector<std::string> errors(names.size());

    auto job = [&](std::size_t i) {
        try {
            RunOptions ro;
            ro.config = opts.config_dir / (names[i] + ".cfg");
            ro.out = opts.out / names[i];
            results[i] = execute_run(ro);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    fs::create_directories(opts.out);
    if (opts.jobs > 1) {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < names.size(); ++i) pool.emplace_back(job, i);
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < names.size(); ++i) job(i);
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!errors[i].empty()) {
            err << names[i] << ": " << errors[i] << "\n";
            return kExitConfig;
        }
    }

    std::ostringstream md;
    md << "# Reference study\n\n";
    md << "Both topologies use one identical protocol and trigger parameter set.\n\n";
    md << "| topology | status | max tail abs(x_i - x_0) | max tail abs(v_i - v_0) | bounds met | max triggered fraction | "
          "total events |\n|---|---|---|---|---|---|---|\n";
    std::vector<FeasibilityRow> feas;
    int code = kExitOk;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& r = *results[i];
        const auto& m = r.metrics;
        const double px = m.tail_position_error.maxCoeff();
        const double vx = m.tail_velocity_error.maxCoeff();
        const double frac = *std::max_element(m.triggered_fraction.begin(), m.triggered_fraction.end());
        long total = 0;
        for (long c : m.event_counts) total += c;
        const bool ok = r.record.status == RunStatus::Completed && px < kTailPositionBound && vx < kTailVelocityBound;
        if (r.record.status != RunStatus::Completed) code = kExitDivergence;
        md << "| " << names[i] << " | " << (r.record.status == RunStatus::Completed ? "completed" : "diverged") << " | "
           << format_number(px) << " | " << format_number(vx) << " | " << (ok ? "yes" : "no") << " | "
           << format_number(frac) << " | " << total << " |\n";
        print_metrics(out, r);
        if (r.experiment.lyapunov) {
            const auto& sim = r.experiment.sim;
            feas.push_back({names[i], *r.experiment.lyapunov,
                            check_feasibility(*r.experiment.lyapunov, sim.protocol, sim.topology, sim.d_initial)});
        }
    }

    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& r = *results[i];
        const auto& m = r.metrics;
        md << "\n## " << names[i] << "\n\n";
        md << "| agent | events | triggered fraction | min gap [s] | c final | max abs(dc/dt) tail | d final |\n"
              "|---|---|---|---|---|---|---|\n";
        for (int a = 0; a < r.record.n_followers; ++a) {
            const auto idx = static_cast<std::size_t>(a);
            md << "| " << (a + 1) << " | " << m.event_counts[idx] << " | " << format_number(m.triggered_fraction[idx])
               << " | " << (m.min_gap[idx] ? format_number(*m.min_gap[idx]) : std::string("NA")) << " | "
               << format_number(m.c_final(a)) << " | " << format_number(m.c_rate_tail_max(a)) << " | "
               << format_number(m.d_final(a)) << " |\n";
        }
        if (r.lyapunov) {
            md << "\nLyapunov trace: " << (r.lyapunov->monotone() ? "non-increasing" : "increases") << " outside event "
               << "transients (" << r.lyapunov->violations.size() << " violating steps, max step increase "
               << format_number(r.lyapunov->max_increase) << ", tolerance " << format_number(r.lyapunov->tolerance)
               << ").\n";
        }
        md << "\nFigures: `" << names[i] << "/positions.svg`, `" << names[i] << "/velocities.svg`, `" << names[i]
           << "/gains.svg`, `" << names[i] << "/thresholds.svg`, `" << names[i] << "/events.svg`.\n";
    }
    if (!feas.empty()) {
        md << "\n## Certificate check for the configured Lyapunov parameters\n\n";
        md << "| topology | lambda_min(Omega) | lambda_max(Pi) | verdict | violations |\n|---|---|---|---|---|\n";
        for (const auto& f : feas) {
            std::string v;
            for (const auto& s : f.report.violations) v += (v.empty() ? "" : "; ") + s;
            md << "| " << f.label << " | " << format_number(f.report.lambda_min_omega) << " | "
               << format_number(f.report.lambda_max_pi) << " | " << (f.report.passed ? "pass" : "fail") << " | " << v
               << " |\n";
        }
        write_feasibility_csv(feas, opts.out / "feasibility_report.csv");
    }
    write_text(opts.out / "reference_report.md", md.str());

    // cross-topology figures, drawn from the per-run CSVs
    std::vector<Series> d1;
    for (const auto& name : names) {
        auto series = trajectory_series(read_csv(opts.out / name / "trajectory.csv"), "d");
        Series s = series.at(1);
        s.label = "d_1 (" + name + ")";
        s.emphasized = false;
        d1.push_back(std::move(s));
    }
    write_text(opts.out / "threshold_d1.svg", line_chart({"Threshold d_1(t) under g1 and g2", "t [s]", "d_1"}, d1));
    auto gains = followers_only(trajectory_series(read_csv(opts.out / "g1" / "trajectory.csv"), "c"));
    write_text(opts.out / "gains_g1.svg", line_chart({"Coupling gains c_i(t) under g1", "t [s]", "c_i"}, gains));

    out << "report written to " << (opts.out / "reference_report.md").string() << "\n";
    return code;
}

}  // namespace etcon::app
