#include "etcon_app/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace etcon::app {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<long> sampled_rows(long length, int stride) {
    std::vector<long> rows;
    if (length == 0) return rows;
    for (long k = 0; k < length; k += stride) rows.push_back(k);
    if (rows.back() != length - 1) rows.push_back(length - 1);
    return rows;
}

/// "x" for n == 1, otherwise "x_1,x_2,..."
std::string vector_header(const std::string& name, int n) {
    if (n == 1) return name;
    std::string out;
    for (int a = 0; a < n; ++a) out += (a ? "," : "") + name + "_" + std::to_string(a + 1);
    return out;
}

void put_segment(std::ostream& os, const Eigen::MatrixXd& m, long k, int col, int n) {
    for (int a = 0; a < n; ++a) os << ',' << format_number(m(k, col + a));
}

void put_blank(std::ostream& os, int n) {
    for (int a = 0; a < n; ++a) os << ',';
}

}  // namespace

void write_trajectory_csv(const RunRecord& record, const std::filesystem::path& path, int stride) {
    auto out = open_out(path);
    const int n = record.state_dim;
    out << "t,agent_id," << vector_header("x", n) << ',' << vector_header("v", n) << ',' << vector_header("w", n)
        << ",c,d," << vector_header("u", n) << '\n';
    for (long k : sampled_rows(record.length(), std::max(stride, 1))) {
        const std::string t = format_number(record.times[static_cast<std::size_t>(k)]);
        out << t << ",0";
        put_segment(out, record.x0, k, 0, n);
        put_segment(out, record.v0, k, 0, n);
        put_blank(out, n);
        out << ",,";
        put_blank(out, n);
        out << '\n';
        for (int i = 0; i < record.n_followers; ++i) {
            out << t << ',' << (i + 1);
            put_segment(out, record.x, k, i * n, n);
            put_segment(out, record.v, k, i * n, n);
            put_segment(out, record.w, k, i * n, n);
            out << ',' << format_number(record.c(k, i)) << ',' << format_number(record.d(k, i));
            put_segment(out, record.u, k, i * n, n);
            out << '\n';
        }
    }
}

void write_events_csv(const RunRecord& record, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "t,agent_id," << vector_header("x_broadcast", record.state_dim) << ",d_value\n";
    for (const auto& e : record.events) {
        out << format_number(e.t) << ',' << (e.agent + 1);
        for (Eigen::Index a = 0; a < e.x_broadcast.size(); ++a) out << ',' << format_number(e.x_broadcast(a));
        out << ',' << format_number(e.d_value) << '\n';
    }
}

void write_summary_csv(const RunRecord& record, const ConsensusMetrics& m, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "agent_id,events,triggered_fraction,min_gap,final_position_error,final_velocity_error,"
           "tail_position_error,tail_velocity_error,c_final,c_max_abs,c_rate_tail_max,d_final,d_max_increase\n";
    for (int i = 0; i < record.n_followers; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        out << (i + 1) << ',' << m.event_counts[idx] << ',' << format_number(m.triggered_fraction[idx]) << ','
            << (m.min_gap[idx] ? format_number(*m.min_gap[idx]) : std::string("NA")) << ','
            << format_number(record.summary.final_position_error(i)) << ','
            << format_number(record.summary.final_velocity_error(i)) << ',' << format_number(m.tail_position_error(i))
            << ',' << format_number(m.tail_velocity_error(i)) << ',' << format_number(m.c_final(i)) << ','
            << format_number(m.c_max_abs(i)) << ',' << format_number(m.c_rate_tail_max(i)) << ','
            << format_number(m.d_final(i)) << ',' << format_number(m.d_max_increase(i)) << '\n';
    }
}

void write_run_info_csv(const RunRecord& record, const std::string& name, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "key,value\n";
    out << "name," << name << '\n';
    out << "status," << (record.status == RunStatus::Completed ? "completed" : "diverged") << '\n';
    out << "rng," << record.rng << '\n';
    out << "seed," << record.seed << '\n';
    out << "h," << format_number(record.h) << '\n';
    out << "t_start," << (record.times.empty() ? "NA" : format_number(record.times.front())) << '\n';
    out << "t_end," << (record.times.empty() ? "NA" : format_number(record.times.back())) << '\n';
    out << "grid_points," << record.length() << '\n';
    out << "steps_evaluated," << record.steps_evaluated << '\n';
    out << "followers," << record.n_followers << '\n';
    out << "state_dim," << record.state_dim << '\n';
    std::string diag = record.diagnostic;
    for (auto& ch : diag) {
        if (ch == ',' || ch == '\n') ch = ';';
    }
    out << "diagnostic," << diag << '\n';
}

void write_feasibility_csv(const std::vector<FeasibilityRow>& rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "label,mu,varpi,eta,omega,kappa,varsigma,rho,lambda_min_h,lambda_min_omega,lambda_max_pi,"
           "lambda_max_pi11,lambda_max_pi22,mu_dominates,eta_ratio_matches,verdict,violations\n";
    for (const auto& row : rows) {
        const auto& p = row.params;
        const auto& r = row.report;
        std::string violations;
        for (const auto& v : r.violations) violations += (violations.empty() ? "" : "; ") + v;
        out << row.label << ',' << format_number(p.mu) << ',' << format_number(p.varpi) << ',' << format_number(p.eta)
            << ',' << format_number(p.omega) << ',' << format_number(r.kappa) << ',' << format_number(p.varsigma) << ','
            << format_number(p.rho) << ',' << format_number(r.lambda_min_h) << ',' << format_number(r.lambda_min_omega)
            << ',' << format_number(r.lambda_max_pi) << ',' << format_number(r.lambda_max_pi11) << ','
            << format_number(r.lambda_max_pi22) << ',' << (r.checks.mu_dominates ? "yes" : "no") << ','
            << (r.checks.eta_ratio_matches ? "yes" : "no") << ',' << (r.passed ? "pass" : "fail") << ','
            << violations << '\n';
    }
}

void write_lyapunov_csv(const LyapunovTrace& trace, const std::filesystem::path& path, int stride) {
    auto out = open_out(path);
    out << "t,V\n";
    for (long k : sampled_rows(static_cast<long>(trace.values.size()), std::max(stride, 1))) {
        out << format_number(trace.times[static_cast<std::size_t>(k)]) << ','
            << format_number(trace.values[static_cast<std::size_t>(k)]) << '\n';
    }
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const int col = column(name);
    if (col < 0) throw std::runtime_error("csv column '" + name + "' not found");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        const auto& cell = static_cast<std::size_t>(col) < row.size() ? row[static_cast<std::size_t>(col)] : std::string();
        if (cell.empty() || cell == "NA") {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double value = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (res.ec != std::errc()) throw std::runtime_error("csv cell '" + cell + "' is not a number");
        out.push_back(value);
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvTable table;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (std::getline(in, line)) table.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty()) table.rows.push_back(split(line));
    }
    return table;
}

}  // namespace etcon::app
