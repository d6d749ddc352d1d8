#pragma once

#include <Eigen/Dense>

namespace etcon {

/// Which tracking error enters the first term of the gain law.
enum class GainLawMode {
    /// x_i(t) - x_0(t), the continuous error as written in the law.
    AsPrinted,
    /// x_i(t_k^i) - x_0(t), built from the agent's own last broadcast.
    Sampled,
};

struct ProtocolParams {
    double alpha = 1.0;
    double beta = 30.0;
    double gamma = 35.0;
    double delta = 13.67;
    Eigen::VectorXd c_initial;  // per agent
    GainLawMode gain_law = GainLawMode::AsPrinted;

    /// Throws std::invalid_argument unless alpha, beta, gamma, delta > 0.
    void validate() const;
};

/// Per-agent continuous state of the closed loop.
struct AgentState {
    Eigen::VectorXd x;
    Eigen::VectorXd v;
    Eigen::VectorXd w;  // estimator of the network-coupled velocity
    double c = 0.0;     // adaptive coupling gain
};

/// u_i = -alpha c_i S_i - alpha w_i
[[nodiscard]] Eigen::VectorXd control_input(const AgentState& state, const Eigen::VectorXd& s,
                                            const ProtocolParams& params);

/// w_dot_i = -gamma w_i - beta c_i S_i
[[nodiscard]] Eigen::VectorXd estimator_rate(const AgentState& state, const Eigen::VectorXd& s,
                                             const ProtocolParams& params);

/// c_dot_i = (beta - alpha) <x_tilde, S> + delta (beta^2 - alpha^2) / beta <w_i, S>
[[nodiscard]] double c_rate(const AgentState& state, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& s,
                            const ProtocolParams& params);

}  // namespace etcon
