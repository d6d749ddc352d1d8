#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the library's numerics; the point is a second path to the same numbers.

#include "etcon/analysis.hpp"
#include "etcon/simulator.hpp"
#include "etcon/topology.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace etcon::testing {

inline const Eigen::MatrixXd& g1_laplacian() {
    static const Eigen::MatrixXd m = [] {
        Eigen::MatrixXd l(6, 6);
        l << 6, -1, -2, -1, -2, 0,
            -1, 8, -3, 0, 0, -4,
            -2, -3, 5, 0, 0, 0,
            -1, 0, 0, 4, -3, 0,
            -2, 0, 0, -3, 6, -1,
            0, -4, 0, 0, -1, 5;
        return l;
    }();
    return m;
}

// Fifth diagonal entry corrected from the printed 5 to 4 (zero row sum).
inline const Eigen::MatrixXd& g2_laplacian() {
    static const Eigen::MatrixXd m = [] {
        Eigen::MatrixXd l(6, 6);
        l << 2, -1, -1, 0, 0, 0,
            -1, 5, -3, -1, 0, 0,
            -1, -3, 6, -1, -1, 0,
            0, -1, -1, 3, 0, -1,
            0, 0, -1, 0, 4, -3,
            0, 0, 0, -1, -3, 4;
        return l;
    }();
    return m;
}

inline Eigen::VectorXd g1_leader() { return (Eigen::VectorXd(6) << 2, 0, 0, 0, 0, 0).finished(); }
inline Eigen::VectorXd g2_leader() { return (Eigen::VectorXd(6) << 0, 0, 5, 0, 0, 0).finished(); }
inline Eigen::VectorXd reference_xi() { return (Eigen::VectorXd(6) << 0.5, 0.2, 0.4, 0.3, 0.5, 0.6).finished(); }

/// Small seeded generator for hand-rolled property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    Eigen::VectorXd vector(int n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    /// Random spanning tree plus extra edges; weights in [0.1, 3].
    Eigen::MatrixXd connected_adjacency(int n) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), rng_);
        for (int k = 1; k < n; ++k) {
            const int a = order[static_cast<std::size_t>(k)];
            const int b = order[static_cast<std::size_t>(integer(0, k - 1))];
            w(a, b) = w(b, a) = uniform(0.1, 3.0);
        }
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (w(i, j) == 0.0 && coin(0.3)) w(i, j) = w(j, i) = uniform(0.1, 3.0);
            }
        }
        return w;
    }

    /// Two or more components: vertices are split into a random two-way partition
    /// and edges are only drawn inside each part.
    Eigen::MatrixXd disconnected_adjacency(int n) {
        const int cut = integer(1, n - 1);
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), rng_);
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                const bool same = (a < cut) == (b < cut);
                if (same && coin(0.6)) {
                    const int i = order[static_cast<std::size_t>(a)];
                    const int j = order[static_cast<std::size_t>(b)];
                    w(i, j) = w(j, i) = uniform(0.1, 3.0);
                }
            }
        }
        return w;
    }

    /// Nonnegative leader weights with at least one positive entry.
    Eigen::VectorXd leader_weights(int n) {
        Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
        k(integer(0, n - 1)) = uniform(0.5, 5.0);
        for (int i = 0; i < n; ++i) {
            if (coin(0.25)) k(i) = uniform(0.1, 5.0);
        }
        return k;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Characteristic polynomial coefficients c_0..c_n of det(lambda I - A)
/// (c_n = 1) by the Faddeev-LeVerrier recursion, in long double.
inline std::vector<long double> char_poly(const Eigen::MatrixXd& a) {
    const auto n = static_cast<int>(a.rows());
    using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const M al = a.cast<long double>();
    std::vector<long double> c(static_cast<std::size_t>(n + 1), 0.0L);
    c[static_cast<std::size_t>(n)] = 1.0L;
    M m = M::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        m = al * m + c[static_cast<std::size_t>(n - k + 1)] * M::Identity(n, n);
        c[static_cast<std::size_t>(n - k)] = -(al * m).trace() / static_cast<long double>(k);
    }
    return c;
}

/// All roots of a monic polynomial by Durand-Kerner iteration; real parts,
/// ascending. Intended for the small symmetric matrices of the graph tests.
inline std::vector<double> poly_real_roots(const std::vector<long double>& c) {
    using C = std::complex<long double>;
    const auto n = static_cast<int>(c.size()) - 1;
    long double bound = 0.0L;
    for (int k = 0; k < n; ++k) bound = std::max(bound, std::abs(c[static_cast<std::size_t>(k)]));
    bound += 1.0L;
    std::vector<C> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) z[static_cast<std::size_t>(k)] = std::polar(bound, 0.4L + 2.0L * 3.14159265358979L * k / n);
    auto eval = [&](C x) {
        C p = c[static_cast<std::size_t>(n)];
        for (int k = n - 1; k >= 0; --k) p = p * x + c[static_cast<std::size_t>(k)];
        return p;
    };
    for (int iter = 0; iter < 5000; ++iter) {
        long double moved = 0.0L;
        for (int i = 0; i < n; ++i) {
            C denom = 1.0L;
            for (int j = 0; j < n; ++j) {
                if (j != i) denom *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
            }
            const C delta = eval(z[static_cast<std::size_t>(i)]) / denom;
            z[static_cast<std::size_t>(i)] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-18L) break;
    }
    std::vector<double> roots;
    for (const auto& r : z) roots.push_back(static_cast<double>(r.real()));
    std::sort(roots.begin(), roots.end());
    return roots;
}

/// Eigenvalues of a real symmetric 3x3 matrix by the trigonometric closed form
/// of the cubic, ascending.
inline std::vector<double> symmetric3_eigenvalues(const Eigen::Matrix3d& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                      2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) return {q, q, q};
    const Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = std::acos(-1.0);
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::vector<double> out{e1, e2, e3};
    std::sort(out.begin(), out.end());
    return out;
}

/// Pendulum acceleration, written out independently of the library model.
inline double pendulum_accel(double x, double v, double g = 9.8, double k = 0.1, double l = 4.0, double m = 1.0) {
    return -(g / l) * std::sin(x) - (k / m) * v;
}

/// Hand-rolled classical RK4 for the scalar pendulum; returns (x, v) after `steps` steps.
inline std::pair<double, double> pendulum_rk4(double x, double v, double h, long steps) {
    for (long s = 0; s < steps; ++s) {
        const double k1x = v, k1v = pendulum_accel(x, v);
        const double k2x = v + 0.5 * h * k1v, k2v = pendulum_accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
        const double k3x = v + 0.5 * h * k2v, k3v = pendulum_accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
        const double k4x = v + h * k3v, k4v = pendulum_accel(x + h * k3x, v + h * k3v);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return {x, v};
}

/// Explicit Euler for the pendulum with Richardson extrapolation between h
/// and h/2 (second order). Used as the fine-step reference.
inline std::pair<double, double> pendulum_euler_richardson(double x0, double v0, double horizon, long steps) {
    auto euler = [&](long n) {
        const double h = horizon / static_cast<double>(n);
        long double x = x0, v = v0;
        for (long s = 0; s < n; ++s) {
            const long double a = pendulum_accel(static_cast<double>(x), static_cast<double>(v));
            x += h * v;
            v += h * a;
        }
        return std::pair<long double, long double>{x, v};
    };
    const auto coarse = euler(steps);
    const auto fine = euler(2 * steps);
    return {static_cast<double>(2 * fine.first - coarse.first), static_cast<double>(2 * fine.second - coarse.second)};
}

/// exp(A) by scaling and squaring of a truncated Taylor series.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd s = a / std::pow(2.0, squarings);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 20; ++k) {
        term = term * s / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Stacked matrix form of the closed loop for scalar agents (n = 1):
/// v_dot = f - alpha C H (x_tilde + eps) - alpha w, w_dot = -gamma w - beta C H (x_tilde + eps),
/// c_dot = (beta - alpha) diag(x_tilde) H (x_tilde + eps) + delta (beta^2 - alpha^2)/beta diag(w) H (x_tilde + eps).
struct CompactRates {
    Eigen::VectorXd u;
    Eigen::VectorXd w_dot;
    Eigen::VectorXd c_dot;
};

inline CompactRates compact_form(const Eigen::MatrixXd& h, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& eps,
                                 const Eigen::VectorXd& w, const Eigen::VectorXd& c, double alpha, double beta,
                                 double gamma, double delta) {
    const Eigen::MatrixXd cm = c.asDiagonal();
    const Eigen::VectorXd hs = h * (x_tilde + eps);
    CompactRates r;
    r.u = -alpha * cm * hs - alpha * w;
    r.w_dot = -gamma * w - beta * cm * hs;
    r.c_dot = (beta - alpha) * x_tilde.asDiagonal() * hs + delta * (beta * beta - alpha * alpha) / beta * w.asDiagonal() * hs;
    return r;
}

/// Same numbers as the library's random initial conditions, drawn by hand:
/// u = (engine() >> 11) * 2^-53, value = lo + (hi - lo) * u. Order: leader x,
/// leader v, then for each follower its x followed by its v.
inline std::vector<double> reference_draws(std::uint64_t seed, int count, double lo, double hi) {
    std::mt19937_64 eng(seed);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
        out.push_back(lo + (hi - lo) * u);
    }
    return out;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("etcon_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Longest run of consecutive integration steps on which one agent fired.
inline long longest_fire_streak(const RunRecord& record, int agent) {
    long best = 0, cur = 0, prev = -2;
    for (const auto& e : record.events) {
        if (e.agent != agent) continue;
        cur = e.step == prev + 1 ? cur + 1 : 1;
        best = std::max(best, cur);
        prev = e.step;
    }
    return best;
}

}  // namespace etcon::testing
