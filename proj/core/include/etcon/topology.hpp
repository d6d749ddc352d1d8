#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace etcon {

/// Reasons a graph specification is rejected.
enum class TopologyErrorKind {
    DimensionMismatch,
    Asymmetric,
    NegativeWeight,
    SelfLoop,
    NoLeaderLink,
    InvalidLaplacian,
};

class TopologyError : public std::invalid_argument {
public:
    TopologyError(TopologyErrorKind kind, const std::string& what)
        : std::invalid_argument(what), kind_(kind) {}

    [[nodiscard]] TopologyErrorKind kind() const noexcept { return kind_; }

private:
    TopologyErrorKind kind_;
};

/// Thrown when the symmetric eigensolver does not converge.
class EigensolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Undirected follower graph plus the leader pinning weights.
///
/// Holds the adjacency W, Laplacian L (zero row sums), leader weights K and
/// the augmented matrix H = L + diag(K). Immutable once built.
class Topology {
public:
    [[nodiscard]] int n_followers() const noexcept { return static_cast<int>(adjacency_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& adjacency() const noexcept { return adjacency_; }
    [[nodiscard]] const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
    [[nodiscard]] const Eigen::VectorXd& leader_weights() const noexcept { return leader_weights_; }
    [[nodiscard]] const Eigen::MatrixXd& h_matrix() const noexcept { return h_matrix_; }

    [[nodiscard]] double weight(int i, int j) const { return adjacency_(i, j); }
    [[nodiscard]] double leader_weight(int i) const { return leader_weights_(i); }
    [[nodiscard]] bool has_leader_access(int i) const { return leader_weights_(i) > 0.0; }

private:
    friend Topology build_topology(const Eigen::MatrixXd&, const Eigen::VectorXd&);

    Eigen::MatrixXd adjacency_;
    Eigen::MatrixXd laplacian_;
    Eigen::VectorXd leader_weights_;
    Eigen::MatrixXd h_matrix_;
};

/// Validates W and K and assembles L and H.
/// Throws TopologyError with a distinct kind for each violated precondition.
[[nodiscard]] Topology build_topology(const Eigen::MatrixXd& adjacency,
                                      const Eigen::VectorXd& leader_weights);

/// Accepts a Laplacian (row sums zero, off-diagonals <= 0), converts it to W
/// and forwards to build_topology.
[[nodiscard]] Topology topology_from_laplacian(const Eigen::MatrixXd& laplacian,
                                               const Eigen::VectorXd& leader_weights);

/// Breadth-first reachability from vertex 0 over edges with w_ij != 0.
[[nodiscard]] bool is_connected(const Topology& t);

struct SpectralFacts {
    Eigen::VectorXd laplacian_eigenvalues;  // ascending
    Eigen::VectorXd h_eigenvalues;          // ascending
    double zero_tolerance = 0.0;
    int laplacian_zero_count = 0;
    bool connected = false;
    bool simple_zero = false;               // exactly one zero eigenvalue of L
    bool h_positive_definite = false;

    [[nodiscard]] double h_min() const { return h_eigenvalues(0); }
};

/// Eigenvalues of L and H with the zero test |lambda| <= 1e-9 * max|lambda(L)|.
[[nodiscard]] SpectralFacts spectral_certificate(const Topology& t);

/// Ascending eigenvalues of a symmetric matrix; throws EigensolverError on failure.
[[nodiscard]] Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

}  // namespace etcon
