#pragma once

#include "etcon/dynamics.hpp"
#include "etcon/protocol.hpp"
#include "etcon/topology.hpp"
#include "etcon/trigger.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etcon {

enum class Integrator { Rk4, Euler };

enum class TriggerMode {
    Adaptive,  // event rule with the adaptive threshold
    Never,     // only the initial broadcast; samples are then held forever
    Always,    // every agent broadcasts at every step
};

struct InitialConditions {
    enum class Kind { Explicit, Random };
    Kind kind = Kind::Random;

    // Explicit: rows are agents, columns are state components.
    Eigen::MatrixXd x;
    Eigen::MatrixXd v;
    Eigen::VectorXd x0;
    Eigen::VectorXd v0;

    // Random: uniform in [lo, hi], leader first, then followers (x then v).
    double lo = -1.0;
    double hi = 1.0;
    std::uint64_t seed = 0;
};

struct SimConfig {
    Topology topology;
    DynamicsPtr dynamics;
    ProtocolParams protocol;
    Eigen::VectorXd xi;
    Eigen::VectorXd d_initial;
    double t0 = 0.0;
    double t_end = 30.0;
    double h = 1e-3;
    Integrator integrator = Integrator::Rk4;
    TriggerMode trigger_mode = TriggerMode::Adaptive;
    InitialConditions init;

    [[nodiscard]] int n_followers() const { return topology.n_followers(); }
    [[nodiscard]] int state_dim() const { return dynamics ? dynamics->state_dim() : 1; }
    [[nodiscard]] long steps() const;

    /// Throws std::invalid_argument on any inconsistency (sizes, h <= 0, xi <= 0, ...).
    void validate() const;
};

inline constexpr const char* kRngName = "mt19937_64";
inline constexpr double kDivergenceBound = 1e9;

struct ResolvedInitialState {
    Eigen::MatrixXd x;   // N x n
    Eigen::MatrixXd v;   // N x n
    Eigen::VectorXd x0;  // n
    Eigen::VectorXd v0;  // n
};

/// Explicit values are copied; random ones are drawn with mt19937_64 using a
/// portable 53-bit mantissa mapping, so the same seed gives the same numbers
/// on every platform.
[[nodiscard]] ResolvedInitialState resolve_initial_conditions(const SimConfig& cfg);

struct SystemState {
    double t = 0.0;
    Eigen::MatrixXd x;  // N x n
    Eigen::MatrixXd v;
    Eigen::MatrixXd w;
    Eigen::VectorXd c;
    Eigen::VectorXd d;
    Eigen::VectorXd x0;
    Eigen::VectorXd v0;
    std::vector<SampledStore> stores;

    [[nodiscard]] AgentState agent(int i) const;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int agent, double time, std::string component, double value);

    /// -1 for the leader.
    [[nodiscard]] int agent() const noexcept { return agent_; }
    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] const std::string& component() const noexcept { return component_; }
    [[nodiscard]] double value() const noexcept { return value_; }

private:
    int agent_;
    double time_;
    std::string component_;
    double value_;
};

/// Per-agent trigger evaluation at one grid point.
struct TriggerSample {
    double e_value = 0.0;      // E_i
    double error_sq = 0.0;     // ||e_x||^2
    double threshold = 0.0;    // |d_i| ||S_i||^2
    bool guard_held = false;   // equilibrium guard suppressed the test
    bool fired = false;
};

struct TriggerPhase {
    double t = 0.0;
    std::vector<TriggerSample> samples;
    std::vector<BroadcastMsg> broadcasts;  // ascending sender id
};

/// Fixed-step engine. Each step evaluates every trigger on the stores as they
/// were at the start of the step, delivers all resulting broadcasts in
/// ascending agent order, then integrates the augmented ODE over [t, t+h]
/// with the held samples.
class Simulator {
public:
    explicit Simulator(SimConfig cfg);

    [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const SystemState& state() const noexcept { return state_; }
    [[nodiscard]] long step_index() const noexcept { return step_; }
    [[nodiscard]] const std::vector<BroadcastMsg>& initial_broadcasts() const noexcept { return initial_; }

    /// Phase (a): triggers, broadcasts.
    TriggerPhase evaluate_triggers();
    /// Phase (b): one integrator step. Throws DivergenceError.
    void integrate();
    /// (a) then (b).
    TriggerPhase step();

    /// S_i using the current stores and the given leader position.
    [[nodiscard]] Eigen::VectorXd combined_term(int i, const Eigen::VectorXd& x0) const;
    /// u_i at the current state and stores.
    [[nodiscard]] Eigen::VectorXd control(int i) const;
    /// c_dot_i at the current state and stores.
    [[nodiscard]] double gain_rate(int i) const;

private:
    [[nodiscard]] Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd& y);
    [[nodiscard]] Eigen::VectorXd derivative(double t, const Eigen::VectorXd& y) const;
    void check_finite() const;

    SimConfig cfg_;
    SystemState state_;
    std::vector<BroadcastMsg> initial_;
    long step_ = 0;
};

struct EventRecord {
    double t = 0.0;
    int agent = 0;  // 0-based follower index
    long step = 0;
    Eigen::VectorXd x_broadcast;
    double d_value = 0.0;
};

enum class RunStatus { Completed, Diverged };

struct RunSummary {
    Eigen::VectorXd final_position_error;  // |x_i - x_0| at the last recorded point
    Eigen::VectorXd final_velocity_error;
    std::vector<long> event_counts;
    std::vector<std::optional<double>> min_gap;
};

/// Trajectory of one run. Matrix rows are grid points; per-agent vector
/// quantities occupy columns [i*n, (i+1)*n).
struct RunRecord {
    std::vector<double> times;
    Eigen::MatrixXd x, v, w, u;  // T x (N n)
    Eigen::MatrixXd c, d;        // T x N
    Eigen::MatrixXd x0, v0;      // T x n
    std::vector<EventRecord> events;
    RunSummary summary;

    int n_followers = 0;
    int state_dim = 1;
    double h = 0.0;
    long steps_evaluated = 0;  // grid points at which triggers were tested
    std::string rng = kRngName;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Completed;
    std::string diagnostic;

    [[nodiscard]] Eigen::VectorXd position(long k, int i) const { return x.row(k).segment(i * state_dim, state_dim); }
    [[nodiscard]] Eigen::VectorXd velocity(long k, int i) const { return v.row(k).segment(i * state_dim, state_dim); }
    [[nodiscard]] long length() const { return static_cast<long>(times.size()); }
};

/// Runs the whole horizon. On divergence the partial trajectory is kept and
/// status is set to Diverged with a diagnostic; no exception escapes.
[[nodiscard]] RunRecord run(const SimConfig& cfg);

/// Smallest gap between consecutive events of each agent; nullopt with
/// fewer than two events.
[[nodiscard]] std::vector<std::optional<double>> min_inter_event_gap(const RunRecord& record);

/// Events per agent divided by the number of grid points at which triggers were tested.
[[nodiscard]] std::vector<double> triggered_fraction(const RunRecord& record);

[[nodiscard]] RunSummary summarize(const RunRecord& record);

}  // namespace etcon
