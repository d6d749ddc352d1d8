#include "etcon/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace etcon {

double kappa_bound(double varpi, double eta, double rho, double alpha, double beta) {
    const double ab = alpha / (2.0 * beta);
    return std::max({rho * (varpi + eta / 2.0 + ab), eta / 2.0, ab});
}

double resolved_kappa(const LyapunovParams& p, const ProtocolParams& params) {
    return p.kappa.value_or(kappa_bound(p.varpi, p.eta, p.rho, params.alpha, params.beta));
}

Eigen::VectorXd resolved_d_hat(const LyapunovParams& p, const Eigen::VectorXd& d_initial) {
    if (p.d_hat.size() > 0) {
        if (p.d_hat.size() != d_initial.size()) throw std::invalid_argument("d_hat size mismatch");
        return p.d_hat;
    }
    return 2.0 * d_initial.cwiseAbs();
}

ParameterChecks check_parameter_invariants(const LyapunovParams& p, const ProtocolParams& params,
                                           const Eigen::VectorXd& d_initial) {
    ParameterChecks c;
    c.mu_dominates = p.varpi > 0.0 && p.mu >= p.mu_ratio_min * p.varpi;
    if (!c.mu_dominates) {
        std::ostringstream os;
        os << "mu = " << p.mu << " does not dominate varpi = " << p.varpi << " (required mu >= " << p.mu_ratio_min << " varpi)";
        c.notes.push_back(os.str());
    }
    c.eta_positive = p.eta > 0.0;
    if (!c.eta_positive) c.notes.push_back("eta must be positive");
    c.eta_ratio_matches =
        p.varpi > 0.0 && std::abs(p.eta / p.varpi - params.delta) <= p.eta_ratio_rel_tol * params.delta;
    if (!c.eta_ratio_matches) {
        std::ostringstream os;
        os << "eta/varpi = " << (p.varpi > 0.0 ? p.eta / p.varpi : 0.0) << " differs from delta = " << params.delta;
        c.notes.push_back(os.str());
    }
    const Eigen::VectorXd d_hat = resolved_d_hat(p, d_initial);
    c.d_hat_sufficient = true;
    for (Eigen::Index i = 0; i < d_initial.size(); ++i) {
        if (d_hat(i) < 2.0 * std::abs(d_initial(i))) c.d_hat_sufficient = false;
    }
    if (!c.d_hat_sufficient) c.notes.push_back("d_hat_i < 2 |d_i(t0)| for some agent");
    if (p.kappa) {
        const double bound = kappa_bound(p.varpi, p.eta, p.rho, params.alpha, params.beta);
        c.kappa_consistent = std::abs(*p.kappa - bound) <= 1e-12 * std::max(1.0, std::abs(bound));
        if (!c.kappa_consistent) c.notes.push_back("explicit kappa differs from its defining bound");
    }
    return c;
}

Eigen::Matrix3d omega_core(const LyapunovParams& p, const ProtocolParams& params) {
    const double off = -(params.alpha / params.beta) * p.eta;
    Eigen::Matrix3d core;
    core << p.mu, -p.varpi, p.varpi,
            -p.varpi, p.eta, off,
            p.varpi, off, p.eta;
    return core;
}

Eigen::MatrixXd assemble_omega(const LyapunovParams& p, const ProtocolParams& params, int n_followers) {
    const Eigen::Matrix3d core = omega_core(p, params);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_followers, n_followers);
    Eigen::MatrixXd out(3 * n_followers, 3 * n_followers);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out.block(r * n_followers, c * n_followers, n_followers, n_followers) = core(r, c) * eye;
        }
    }
    return out;
}

PiAssembly assemble_pi(const LyapunovParams& p, const ProtocolParams& params, const Topology& topo) {
    const int n = topo.n_followers();
    if (p.c_hat.rows() != n || p.c_hat.cols() != n) throw std::invalid_argument("c_hat must be N x N");
    if (p.delta_d.size() != n) throw std::invalid_argument("delta_d must have N entries");

    const double a = params.alpha;
    const double b = params.beta;
    const double g = params.gamma;
    const double kappa = resolved_kappa(p, params);
    const double s = p.varsigma;

    const Eigen::MatrixXd& h = topo.h_matrix();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd ch = p.c_hat * h;
    const Eigen::MatrixXd dh2 = p.delta_d.asDiagonal() * (h * h);

    // upper-triangular blocks over [x_tilde, v_tilde, w, eps]
    Eigen::MatrixXd blk[4][4];
    blk[0][0] = p.varpi * (a - b) * ch + kappa * eye - p.omega * dh2;
    blk[0][1] = (0.5 * p.mu - 0.5 * p.varpi * s) * eye;
    blk[0][2] = 0.5 * p.varpi * (a - g) * eye + ((a * a - b * b) / (2.0 * b)) * p.eta * ch;
    blk[1][1] = (-p.varpi + s * p.eta + kappa) * eye;
    blk[1][2] = (-a * p.eta + 0.5 * p.varpi + (a * g / (2.0 * b)) * p.eta - s * a / (2.0 * b)) * eye;
    blk[2][2] = ((a * a / b) * p.eta - g * p.eta + kappa) * eye;
    blk[0][3] = p.varpi * (a - b) * ch - p.omega * dh2;
    blk[1][3] = Eigen::MatrixXd::Zero(n, n);
    blk[2][3] = ((a * a - b * b) / b) * p.eta * ch;
    blk[3][3] = -p.omega * (eye + dh2);

    PiAssembly out;
    out.kappa = kappa;
    out.matrix.resize(4 * n, 4 * n);
    for (int r = 0; r < 4; ++r) {
        for (int c = r; c < 4; ++c) {
            Eigen::MatrixXd block = blk[r][c];
            if (r == c) block = 0.5 * (block + block.transpose()).eval();
            out.matrix.block(r * n, c * n, n, n) = block;
            if (r != c) out.matrix.block(c * n, r * n, n, n) = block.transpose();
        }
    }
    out.lambda_max = symmetric_eigenvalues(out.matrix).maxCoeff();
    return out;
}

FeasibilityReport check_feasibility(const LyapunovParams& p, const ProtocolParams& params, const Topology& topo,
                                    const Eigen::VectorXd& d_initial) {
    FeasibilityReport r;
    r.checks = check_parameter_invariants(p, params, d_initial);
    r.kappa = resolved_kappa(p, params);

    const auto facts = spectral_certificate(topo);
    r.lambda_min_h = facts.h_min();
    r.h_positive_definite = facts.h_positive_definite;
    if (!r.h_positive_definite) {
        r.violations.push_back("H not positive definite (graph disconnected or no leader link)");
        return r;
    }

    const int n = topo.n_followers();
    r.lambda_min_omega = symmetric_eigenvalues(assemble_omega(p, params, n)).minCoeff();
    r.omega_positive_definite = r.lambda_min_omega > 0.0;
    if (!r.omega_positive_definite) r.violations.push_back("Omega not positive definite");

    const auto pi = assemble_pi(p, params, topo);
    r.lambda_max_pi = pi.lambda_max;
    r.lambda_max_pi11 = symmetric_eigenvalues(pi.matrix.topLeftCorner(3 * n, 3 * n)).maxCoeff();
    r.lambda_max_pi22 = symmetric_eigenvalues(pi.matrix.bottomRightCorner(n, n)).maxCoeff();
    r.pi_negative_definite = r.lambda_max_pi < 0.0;
    if (!r.pi_negative_definite) {
        if (r.lambda_max_pi11 >= 0.0) r.violations.push_back("Pi11 not negative definite");
        if (r.lambda_max_pi22 >= 0.0) r.violations.push_back("Pi22 not negative definite");
        if (r.lambda_max_pi11 < 0.0 && r.lambda_max_pi22 < 0.0) {
            r.violations.push_back("Schur complement Pi11 - Pi12 Pi22^-1 Pi12' not negative definite");
        }
    }
    r.passed = r.omega_positive_definite && r.pi_negative_definite;
    return r;
}

namespace {

void set_axis(LyapunovParams& p, const std::string& name, double value) {
    if (name == "mu") p.mu = value;
    else if (name == "varpi") p.varpi = value;
    else if (name == "eta") p.eta = value;
    else if (name == "omega") p.omega = value;
    else throw std::invalid_argument("unknown grid axis '" + name + "'");
}

}  // namespace

std::vector<GridPoint> grid_search(const LyapunovParams& base, const ProtocolParams& params, const Topology& topo,
                                   const Eigen::VectorXd& d_initial, const std::vector<GridAxis>& axes, int jobs) {
    std::size_t total = 1;
    for (const auto& axis : axes) {
        if (axis.values.empty()) throw std::invalid_argument("grid axis '" + axis.name + "' has no values");
        total *= axis.values.size();
    }
    std::vector<GridPoint> points(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        LyapunovParams p = base;
        std::size_t rem = idx;
        for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
            set_axis(p, it->name, it->values[rem % it->values.size()]);
            rem /= it->values.size();
        }
        points[idx].params = std::move(p);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            points[i].report = check_feasibility(points[i].params, params, topo, d_initial);
        }
    };
    const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return points;
}

LyapunovTrace lyapunov_trace(const RunRecord& record, const LyapunovParams& p, const ProtocolParams& params,
                             const Eigen::VectorXd& xi, const Eigen::VectorXd& d_hat) {
    const int n_agents = record.n_followers;
    const int n = record.state_dim;
    if (xi.size() != n_agents || d_hat.size() != n_agents) throw std::invalid_argument("xi/d_hat size mismatch");
    if (p.c_hat.rows() != n_agents) throw std::invalid_argument("c_hat must be N x N");

    const Eigen::MatrixXd omega = assemble_omega(p, params, n_agents);
    const Eigen::VectorXd c_hat = p.c_hat.diagonal();

    LyapunovTrace out;
    out.times = record.times;
    out.values.resize(record.times.size());
    Eigen::VectorXd z(3 * n_agents);
    for (long k = 0; k < record.length(); ++k) {
        double quad = 0.0;
        for (int a = 0; a < n; ++a) {
            for (int i = 0; i < n_agents; ++i) {
                z(i) = record.x(k, i * n + a) - record.x0(k, a);
                z(n_agents + i) = record.v(k, i * n + a) - record.v0(k, a);
                z(2 * n_agents + i) = record.w(k, i * n + a);
            }
            quad += z.dot(omega * z);
        }
        double gains = 0.0;
        for (int i = 0; i < n_agents; ++i) {
            const double dc = record.c(k, i) - c_hat(i);
            const double dd = record.d(k, i) + d_hat(i);
            gains += 0.5 * p.varpi * dc * dc + (p.omega / (2.0 * xi(i))) * dd * dd;
        }
        out.values[static_cast<std::size_t>(k)] = 0.5 * quad + gains;
    }

    double vmax = 0.0;
    for (double v : out.values) vmax = std::max(vmax, std::abs(v));
    out.tolerance = 1e-6 * vmax;

    std::vector<bool> event_at(record.times.size(), false);
    for (const auto& e : record.events) {
        if (e.step >= 0 && e.step < record.length()) event_at[static_cast<std::size_t>(e.step)] = true;
    }
    for (long k = 0; k + 1 < record.length(); ++k) {
        const double inc = out.values[static_cast<std::size_t>(k + 1)] - out.values[static_cast<std::size_t>(k)];
        out.max_increase = std::max(out.max_increase, inc);
        if (inc > out.tolerance) {
            out.increases.push_back(k);
            const bool transient = event_at[static_cast<std::size_t>(k)] || event_at[static_cast<std::size_t>(k + 1)];
            if (!transient) out.violations.push_back(k);
        }
    }
    return out;
}

double min_observed_delta_d(const RunRecord& record, const Eigen::VectorXd& d_hat) {
    double lo = std::numeric_limits<double>::infinity();
    for (long k = 0; k < record.length(); ++k) {
        for (int i = 0; i < record.n_followers; ++i) {
            const double d = record.d(k, i);
            lo = std::min(lo, d - std::abs(d) + d_hat(i));
        }
    }
    return lo;
}

ConsensusMetrics consensus_metrics(const RunRecord& record, double tail_fraction) {
    const int n_agents = record.n_followers;
    const int n = record.state_dim;
    const long len = record.length();
    ConsensusMetrics m;
    m.tail_position_error = Eigen::VectorXd::Zero(n_agents);
    m.tail_velocity_error = Eigen::VectorXd::Zero(n_agents);
    m.c_final = Eigen::VectorXd::Zero(n_agents);
    m.c_max_abs = Eigen::VectorXd::Zero(n_agents);
    m.c_rate_tail_max = Eigen::VectorXd::Zero(n_agents);
    m.d_final = Eigen::VectorXd::Zero(n_agents);
    m.d_max_increase = Eigen::VectorXd::Constant(n_agents, -std::numeric_limits<double>::infinity());
    m.event_counts.assign(static_cast<std::size_t>(n_agents), 0);
    for (const auto& e : record.events) ++m.event_counts[static_cast<std::size_t>(e.agent)];
    m.triggered_fraction = triggered_fraction(record);
    m.min_gap = min_inter_event_gap(record);
    if (len == 0) return m;

    const double t_first = record.times.front();
    const double t_last = record.times.back();
    m.tail_start = t_last - tail_fraction * (t_last - t_first);
    // half-step slack so the window edge does not depend on rounding of k*h
    const double edge = m.tail_start - 0.5 * record.h;

    for (long k = 0; k < len; ++k) {
        const bool in_tail = record.times[static_cast<std::size_t>(k)] >= edge;
        for (int i = 0; i < n_agents; ++i) {
            m.c_max_abs(i) = std::max(m.c_max_abs(i), std::abs(record.c(k, i)));
            if (k + 1 < len) {
                m.d_max_increase(i) = std::max(m.d_max_increase(i), record.d(k + 1, i) - record.d(k, i));
            }
            if (!in_tail) continue;
            const double ex = (record.x.row(k).segment(i * n, n) - record.x0.row(k)).norm();
            const double ev = (record.v.row(k).segment(i * n, n) - record.v0.row(k)).norm();
            m.tail_position_error(i) = std::max(m.tail_position_error(i), ex);
            m.tail_velocity_error(i) = std::max(m.tail_velocity_error(i), ev);
            if (k + 1 < len) {
                const double dt = record.times[static_cast<std::size_t>(k + 1)] - record.times[static_cast<std::size_t>(k)];
                m.c_rate_tail_max(i) = std::max(m.c_rate_tail_max(i), std::abs(record.c(k + 1, i) - record.c(k, i)) / dt);
            }
        }
    }
    m.c_final = record.c.row(len - 1).transpose();
    m.d_final = record.d.row(len - 1).transpose();
    return m;
}

}  // namespace etcon
