#pragma once

#include "etcon/protocol.hpp"
#include "etcon/simulator.hpp"
#include "etcon/topology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace etcon {

/// Parameters of the Lyapunov candidate and of the negativity certificate.
///
/// varsigma and rho are analysis-side copies and need not match the physical
/// model. c_hat is a full N x N matrix (the reference setting uses a scaled
/// inverse of H); its diagonal supplies the per-agent c_hat_i in V.
struct LyapunovParams {
    double mu = 2.0;
    double varpi = 1.5;
    double eta = 20.5;
    double omega = 40.0;
    Eigen::MatrixXd c_hat;
    Eigen::VectorXd d_hat;           // empty: derived as 2 |d_i(t0)|
    Eigen::VectorXd delta_d;         // diagonal of Delta_D
    std::optional<double> kappa;     // empty: derived from kappa_bound
    double varsigma = -0.5;
    double rho = -2.0;
    double mu_ratio_min = 10.0;      // "mu >> varpi" read as mu >= ratio * varpi
    double eta_ratio_rel_tol = 1e-3; // |eta/varpi - delta| <= tol * delta
};

/// kappa = max{ rho (varpi + eta/2 + alpha/(2 beta)), eta/2, alpha/(2 beta) }
[[nodiscard]] double kappa_bound(double varpi, double eta, double rho, double alpha, double beta);

[[nodiscard]] double resolved_kappa(const LyapunovParams& p, const ProtocolParams& params);

/// Fills d_hat with 2 |d_i(t0)| when it is empty.
[[nodiscard]] Eigen::VectorXd resolved_d_hat(const LyapunovParams& p, const Eigen::VectorXd& d_initial);

struct ParameterChecks {
    bool mu_dominates = false;       // mu >= mu_ratio_min * varpi and varpi > 0
    bool eta_positive = false;
    bool eta_ratio_matches = false;  // eta / varpi == delta within tolerance
    bool d_hat_sufficient = false;   // d_hat_i >= 2 d_i(t0) sgn(d_i(t0))
    bool kappa_consistent = true;    // only false when an explicit kappa disagrees
    std::vector<std::string> notes;
};

[[nodiscard]] ParameterChecks check_parameter_invariants(const LyapunovParams& p, const ProtocolParams& params,
                                                         const Eigen::VectorXd& d_initial);

/// 3x3 core (mu, -varpi, varpi; *, eta, -(alpha/beta) eta; *, *, eta).
[[nodiscard]] Eigen::Matrix3d omega_core(const LyapunovParams& p, const ProtocolParams& params);

/// core kron I_N, ordered as [x_tilde, v_tilde, w] blocks.
[[nodiscard]] Eigen::MatrixXd assemble_omega(const LyapunovParams& p, const ProtocolParams& params, int n_followers);

struct PiAssembly {
    Eigen::MatrixXd matrix;  // 4N x 4N over [x_tilde, v_tilde, w, epsilon]
    double lambda_max = 0.0;
    double kappa = 0.0;
};

/// Builds the symmetric 4N x 4N certificate matrix from its printed blocks.
/// Scalar summands become multiples of I_N; off-diagonal blocks are taken from
/// the upper triangle and mirrored, diagonal blocks are symmetrized.
[[nodiscard]] PiAssembly assemble_pi(const LyapunovParams& p, const ProtocolParams& params, const Topology& topo);

struct FeasibilityReport {
    bool h_positive_definite = false;
    double lambda_min_h = 0.0;
    double lambda_min_omega = 0.0;
    double lambda_max_pi = 0.0;
    double lambda_max_pi11 = 0.0;
    double lambda_max_pi22 = 0.0;
    double kappa = 0.0;
    bool omega_positive_definite = false;
    bool pi_negative_definite = false;
    bool passed = false;
    std::vector<std::string> violations;
    ParameterChecks checks;
};

/// Numeric check of Pi < 0 and Omega > 0 for a fully specified parameter set.
/// A non-positive-definite H fails at the precheck without assembling Pi.
[[nodiscard]] FeasibilityReport check_feasibility(const LyapunovParams& p, const ProtocolParams& params,
                                                  const Topology& topo, const Eigen::VectorXd& d_initial);

struct GridAxis {
    std::string name;  // mu | varpi | eta | omega
    std::vector<double> values;
};

struct GridPoint {
    LyapunovParams params;
    FeasibilityReport report;
};

/// Exhaustive sweep over the cartesian product of the axes (first axis
/// slowest). Not an optimizer: it only reports what each point gives.
/// Results are in sweep order regardless of `jobs`.
[[nodiscard]] std::vector<GridPoint> grid_search(const LyapunovParams& base, const ProtocolParams& params,
                                                 const Topology& topo, const Eigen::VectorXd& d_initial,
                                                 const std::vector<GridAxis>& axes, int jobs = 1);

struct LyapunovTrace {
    std::vector<double> times;
    std::vector<double> values;
    double tolerance = 0.0;               // 1e-6 * max V
    std::vector<long> increases;          // k where V[k+1] - V[k] > tolerance
    std::vector<long> violations;         // increases not adjacent to an event
    double max_increase = 0.0;

    [[nodiscard]] bool monotone() const { return violations.empty(); }
};

/// V = 1/2 z' (Omega kron I_n) z + sum varpi/2 (c_i - c_hat_i)^2 + sum omega/(2 xi_i) (d_i + d_hat_i)^2
/// evaluated at every recorded grid point (zeta_i = 1). `d_hat` must already be resolved.
/// Increases on an interval whose end points carry an event are transients and
/// are not counted as violations.
[[nodiscard]] LyapunovTrace lyapunov_trace(const RunRecord& record, const LyapunovParams& p,
                                           const ProtocolParams& params, const Eigen::VectorXd& xi,
                                           const Eigen::VectorXd& d_hat);

/// min over the run of d_i - |d_i| + d_hat_i, i.e. the smallest diagonal entry of Delta_D observed.
[[nodiscard]] double min_observed_delta_d(const RunRecord& record, const Eigen::VectorXd& d_hat);

struct ConsensusMetrics {
    double tail_start = 0.0;
    Eigen::VectorXd tail_position_error;  // max |x_i - x_0| over the tail
    Eigen::VectorXd tail_velocity_error;
    std::vector<long> event_counts;
    std::vector<double> triggered_fraction;
    Eigen::VectorXd c_final;
    Eigen::VectorXd c_max_abs;            // over the whole run
    Eigen::VectorXd c_rate_tail_max;      // max |dc/dt| over the tail (finite differences)
    Eigen::VectorXd d_final;
    Eigen::VectorXd d_max_increase;       // max d_i(t+h) - d_i(t) over the run
    std::vector<std::optional<double>> min_gap;
};

/// Tail statistics over the last `tail_fraction` of the horizon.
[[nodiscard]] ConsensusMetrics consensus_metrics(const RunRecord& record, double tail_fraction = 0.1);

}  // namespace etcon
