#pragma once

#include "etcon/topology.hpp"

#include <Eigen/Dense>

#include <map>
#include <stdexcept>

namespace etcon {

/// Broadcast sent by one agent to all of its neighbours (ideal channel).
struct BroadcastMsg {
    int sender = 0;
    Eigen::VectorXd position;
    double time = 0.0;
};

struct HeldSample {
    Eigen::VectorXd position;
    double time = 0.0;
};

/// Zero-order-hold cache owned by one agent: its own last broadcast and the
/// latest broadcast received from each neighbour. Entries only change when a
/// broadcast is sent or received.
struct SampledStore {
    int agent = 0;
    Eigen::VectorXd own_broadcast;
    double own_broadcast_time = 0.0;
    std::map<int, HeldSample> neighbor_broadcast;
    bool leader_access = false;

    /// e_x = x_i(t_k^i) - x_i(t)
    [[nodiscard]] Eigen::VectorXd measurement_error(const Eigen::VectorXd& x_now) const {
        return own_broadcast - x_now;
    }
};

/// Store for agent i with own_broadcast set to `x_initial` at `t0` and no neighbour entries yet.
[[nodiscard]] SampledStore make_store(const Topology& topo, int i, const Eigen::VectorXd& x_initial, double t0);

class ProtocolViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// S_i = sum_j w_ij (x_i(t_k^i) - x_j(t_k^j)) + k_i (x_i(t_k^i) - x_0(t)).
/// Only relative positions are consumed; x0 is read only when k_i > 0.
/// Throws ProtocolViolation when a neighbour has never broadcast.
[[nodiscard]] Eigen::VectorXd combined_term(const SampledStore& store, const Topology& topo, int i,
                                            const Eigen::VectorXd& x0);

/// Upsilon_i = |d| * ||S||^2
[[nodiscard]] double trigger_threshold(double d, const Eigen::VectorXd& s);

/// E_i = ||e_x||^2 - |d| * ||S||^2
[[nodiscard]] double trigger_value(const Eigen::VectorXd& e_x, double d, const Eigen::VectorXd& s);

inline constexpr double kEquilibriumGuard = 1e-12;

/// E >= 0, except when both e_x and S are below the equilibrium guard.
[[nodiscard]] bool should_fire(double e_value, const Eigen::VectorXd& e_x, const Eigen::VectorXd& s);

/// Threshold adaptation: d_dot = -xi * ||S||^2 (never positive).
[[nodiscard]] double d_rate(const Eigen::VectorXd& s, double xi);

/// Adaptive threshold of one agent. d never exceeds d_initial.
struct TriggerState {
    double d = 1.0;
    double xi = 1.0;
    double d_initial = 1.0;
};

/// Records a broadcast of x_now at time t in the sender's store and returns
/// the message for the neighbours. Afterwards the sender's e_x is exactly zero.
[[nodiscard]] BroadcastMsg on_fire(SampledStore& store, int i, const Eigen::VectorXd& x_now, double t);

/// Applies a received broadcast to a neighbour's store. Messages from agents
/// that are not neighbours of the receiver are ignored.
void receive(SampledStore& store, const Topology& topo, const BroadcastMsg& msg);

}  // namespace etcon
