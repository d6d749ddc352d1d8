#include "etcon/topology.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <vector>

namespace etcon {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kZeroEigenRel = 1e-9;

std::string at(int i, int j) {
    std::ostringstream os;
    os << "(" << i << "," << j << ")";
    return os.str();
}

}  // namespace

Topology build_topology(const Eigen::MatrixXd& adjacency, const Eigen::VectorXd& leader_weights) {
    const auto n = adjacency.rows();
    if (n == 0 || adjacency.cols() != n) {
        throw TopologyError(TopologyErrorKind::DimensionMismatch, "adjacency must be a non-empty square matrix");
    }
    if (leader_weights.size() != n) {
        throw TopologyError(TopologyErrorKind::DimensionMismatch,
                            "leader_weights has " + std::to_string(leader_weights.size()) +
                                " entries, expected " + std::to_string(n));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0) {
            throw TopologyError(TopologyErrorKind::SelfLoop, "nonzero diagonal entry at " + at(i, i));
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::isfinite(adjacency(i, j)) || adjacency(i, j) < 0.0) {
                throw TopologyError(TopologyErrorKind::NegativeWeight, "negative or non-finite weight at " + at(i, j));
            }
            if (std::abs(adjacency(i, j) - adjacency(j, i)) > kSymmetryTol) {
                throw TopologyError(TopologyErrorKind::Asymmetric, "adjacency not symmetric at " + at(i, j));
            }
        }
    }
    bool any_leader = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(leader_weights(i)) || leader_weights(i) < 0.0) {
            throw TopologyError(TopologyErrorKind::NegativeWeight,
                                "negative leader weight for agent " + std::to_string(i));
        }
        any_leader = any_leader || leader_weights(i) > 0.0;
    }
    if (!any_leader) {
        throw TopologyError(TopologyErrorKind::NoLeaderLink, "at least one follower must be linked to the leader");
    }

    Topology t;
    // symmetrize away sub-tolerance noise so L and H are exactly symmetric
    t.adjacency_ = 0.5 * (adjacency + adjacency.transpose());
    t.laplacian_ = -t.adjacency_;
    for (Eigen::Index i = 0; i < n; ++i) {
        t.laplacian_(i, i) = t.adjacency_.row(i).sum();
    }
    t.leader_weights_ = leader_weights;
    t.h_matrix_ = t.laplacian_;
    t.h_matrix_.diagonal() += leader_weights;
    return t;
}

Topology topology_from_laplacian(const Eigen::MatrixXd& laplacian, const Eigen::VectorXd& leader_weights) {
    const auto n = laplacian.rows();
    if (n == 0 || laplacian.cols() != n) {
        throw TopologyError(TopologyErrorKind::DimensionMismatch, "laplacian must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row_sum = laplacian.row(i).sum();
        if (std::abs(row_sum) > kSymmetryTol * scale) {
            std::ostringstream os;
            os << "laplacian row " << i << " sums to " << row_sum << ", expected 0";
            throw TopologyError(TopologyErrorKind::InvalidLaplacian, os.str());
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            if (laplacian(i, j) > 0.0) {
                throw TopologyError(TopologyErrorKind::InvalidLaplacian,
                                    "positive off-diagonal laplacian entry at " + at(i, j));
            }
            w(i, j) = -laplacian(i, j);
        }
    }
    return build_topology(w, leader_weights);
}

bool is_connected(const Topology& t) {
    const int n = t.n_followers();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> frontier{0};
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.pop_front();
        for (int j = 0; j < n; ++j) {
            if (!seen[j] && t.weight(i, j) != 0.0) {
                seen[j] = true;
                ++reached;
                frontier.push_back(j);
            }
        }
    }
    return reached == n;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw EigensolverError("symmetric eigensolver did not converge");
    }
    return solver.eigenvalues();
}

SpectralFacts spectral_certificate(const Topology& t) {
    SpectralFacts facts;
    facts.laplacian_eigenvalues = symmetric_eigenvalues(t.laplacian());
    facts.h_eigenvalues = symmetric_eigenvalues(t.h_matrix());

    const double largest = facts.laplacian_eigenvalues.cwiseAbs().maxCoeff();
    facts.zero_tolerance = kZeroEigenRel * largest;
    for (Eigen::Index k = 0; k < facts.laplacian_eigenvalues.size(); ++k) {
        if (std::abs(facts.laplacian_eigenvalues(k)) <= facts.zero_tolerance) {
            ++facts.laplacian_zero_count;
        }
    }
    facts.connected = is_connected(t);
    facts.simple_zero = facts.laplacian_zero_count == 1;
    // same relative zero test, so a leaderless component (exact zero) is not
    // promoted to positive by rounding
    const double h_largest = facts.h_eigenvalues.cwiseAbs().maxCoeff();
    facts.h_positive_definite = facts.h_eigenvalues(0) > kZeroEigenRel * h_largest;
    return facts;
}

}  // namespace etcon
