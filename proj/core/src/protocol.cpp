#include "etcon/protocol.hpp"

#include <stdexcept>
#include <string>

namespace etcon {

void ProtocolParams::validate() const {
    auto positive = [](double value, const char* name) {
        if (!(value > 0.0)) {
            throw std::invalid_argument(std::string("protocol gain ") + name + " must be positive");
        }
    };
    positive(alpha, "alpha");
    positive(beta, "beta");
    positive(gamma, "gamma");
    positive(delta, "delta");
}

Eigen::VectorXd control_input(const AgentState& state, const Eigen::VectorXd& s, const ProtocolParams& params) {
    return -params.alpha * state.c * s - params.alpha * state.w;
}

Eigen::VectorXd estimator_rate(const AgentState& state, const Eigen::VectorXd& s, const ProtocolParams& params) {
    return -params.gamma * state.w - params.beta * state.c * s;
}

double c_rate(const AgentState& state, const Eigen::VectorXd& x_tilde, const Eigen::VectorXd& s,
              const ProtocolParams& params) {
    const double a = params.alpha;
    const double b = params.beta;
    return (b - a) * x_tilde.dot(s) + params.delta * ((b * b - a * a) / b) * state.w.dot(s);
}

}  // namespace etcon
