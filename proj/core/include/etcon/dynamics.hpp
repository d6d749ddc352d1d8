#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace etcon {

/// Agent self-dynamics f(t, x, v) with the linear velocity coupling
/// f(t, x, v) = varsigma * v + f(t, x) and a Lipschitz bound rho on f(t, .).
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;

    [[nodiscard]] virtual Eigen::VectorXd eval(double t, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& v) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;

    /// eval with the varsigma * v term removed.
    [[nodiscard]] Eigen::VectorXd position_part(double t, const Eigen::VectorXd& x) const;

    [[nodiscard]] double varsigma() const noexcept { return varsigma_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] int state_dim() const noexcept { return state_dim_; }

protected:
    DynamicsModel(double varsigma, double rho, int state_dim);

private:
    double varsigma_;
    double rho_;
    int state_dim_;
};

using DynamicsPtr = std::shared_ptr<const DynamicsModel>;

/// f(t, x, v) = -(g/l) sin(x) - (k/m) v, applied componentwise.
class PendulumModel final : public DynamicsModel {
public:
    PendulumModel(double g, double k, double l, double m, int state_dim = 1);

    [[nodiscard]] Eigen::VectorXd eval(double t, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& v) const override;
    [[nodiscard]] std::string name() const override { return "pendulum"; }

    [[nodiscard]] double g() const noexcept { return g_; }
    [[nodiscard]] double k() const noexcept { return k_; }
    [[nodiscard]] double l() const noexcept { return l_; }
    [[nodiscard]] double m() const noexcept { return m_; }

private:
    double g_, k_, l_, m_;
};

/// A model backed by an arbitrary callable, for programmatic registration.
class FunctionModel final : public DynamicsModel {
public:
    using Fn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    FunctionModel(std::string name, Fn fn, double varsigma, double rho, int state_dim = 1);

    [[nodiscard]] Eigen::VectorXd eval(double t, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& v) const override;
    [[nodiscard]] std::string name() const override { return name_; }

private:
    std::string name_;
    Fn fn_;
};

/// Throws std::invalid_argument when l <= 0 or m <= 0.
[[nodiscard]] std::shared_ptr<const PendulumModel> pendulum(double g, double k, double l, double m,
                                                            int state_dim = 1);

/// Free dynamics f = 0 (varsigma = 0, rho = 0).
[[nodiscard]] DynamicsPtr zero_dynamics(int state_dim = 1);

/// Builds a model by name from a parameter map ("pendulum" and "zero" are built in;
/// further factories may be registered).
using DynamicsFactory = std::function<DynamicsPtr(const std::map<std::string, double>&, int)>;
void register_dynamics(const std::string& name, DynamicsFactory factory);
[[nodiscard]] DynamicsPtr make_dynamics(const std::string& name,
                                        const std::map<std::string, double>& params, int state_dim);

struct PositionBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

struct ValidationReport {
    double max_ratio = 0.0;             // max ||f(t,x)-f(t,y)|| / ||x-y|| over grid pairs
    double claimed_rho = 0.0;
    bool lipschitz_ok = false;
    double coupling_residual = 0.0;     // max ||f(x,v)-f(x,v')-varsigma (v-v')||
    bool coupling_ok = false;
    long pairs_checked = 0;

    [[nodiscard]] bool passed() const noexcept { return lipschitz_ok && coupling_ok; }
};

/// Empirical check of the Lipschitz and linear-velocity-coupling conditions on
/// a tensor grid with grid_points per axis (>= 2). Report only; never throws
/// for a failing model.
[[nodiscard]] ValidationReport validate_assumption1(const DynamicsModel& model, const PositionBox& domain,
                                                    int grid_points, double t = 0.0);

}  // namespace etcon
