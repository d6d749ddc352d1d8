#include "etcon/trigger.hpp"

#include <cmath>
#include <string>

namespace etcon {

SampledStore make_store(const Topology& topo, int i, const Eigen::VectorXd& x_initial, double t0) {
    SampledStore store;
    store.agent = i;
    store.own_broadcast = x_initial;
    store.own_broadcast_time = t0;
    store.leader_access = topo.has_leader_access(i);
    return store;
}

Eigen::VectorXd combined_term(const SampledStore& store, const Topology& topo, int i, const Eigen::VectorXd& x0) {
    const auto& own = store.own_broadcast;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(own.size());
    for (int j = 0; j < topo.n_followers(); ++j) {
        const double w = topo.weight(i, j);
        if (w == 0.0) continue;
        const auto it = store.neighbor_broadcast.find(j);
        if (it == store.neighbor_broadcast.end()) {
            throw ProtocolViolation("agent " + std::to_string(i) + " holds no broadcast from neighbour " +
                                    std::to_string(j));
        }
        s.noalias() -= w * (it->second.position - own);
    }
    const double k = topo.leader_weight(i);
    if (k > 0.0) {
        s.noalias() -= k * (x0 - own);
    }
    return s;
}

double trigger_threshold(double d, const Eigen::VectorXd& s) {
    return std::abs(d) * s.squaredNorm();
}

double trigger_value(const Eigen::VectorXd& e_x, double d, const Eigen::VectorXd& s) {
    return e_x.squaredNorm() - trigger_threshold(d, s);
}

bool should_fire(double e_value, const Eigen::VectorXd& e_x, const Eigen::VectorXd& s) {
    if (e_x.norm() < kEquilibriumGuard && s.norm() < kEquilibriumGuard) {
        return false;
    }
    return e_value >= 0.0;
}

double d_rate(const Eigen::VectorXd& s, double xi) {
    return -xi * s.squaredNorm();
}

BroadcastMsg on_fire(SampledStore& store, int i, const Eigen::VectorXd& x_now, double t) {
    store.own_broadcast = x_now;
    store.own_broadcast_time = t;
    return BroadcastMsg{i, x_now, t};
}

void receive(SampledStore& store, const Topology& topo, const BroadcastMsg& msg) {
    if (msg.sender == store.agent || topo.weight(store.agent, msg.sender) == 0.0) {
        return;
    }
    store.neighbor_broadcast[msg.sender] = HeldSample{msg.position, msg.time};
}

}  // namespace etcon
