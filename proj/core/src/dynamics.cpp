#include "etcon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

namespace etcon {

DynamicsModel::DynamicsModel(double varsigma, double rho, int state_dim)
    : varsigma_(varsigma), rho_(rho), state_dim_(state_dim) {
    if (state_dim < 1) {
        throw std::invalid_argument("state_dim must be positive");
    }
}

Eigen::VectorXd DynamicsModel::position_part(double t, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(x.size());
    return eval(t, x, zero);
}

PendulumModel::PendulumModel(double g, double k, double l, double m, int state_dim)
    : DynamicsModel(-k / m, g / l, state_dim), g_(g), k_(k), l_(l), m_(m) {}

Eigen::VectorXd PendulumModel::eval(double /*t*/, const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    return -(g_ / l_) * x.array().sin().matrix() - (k_ / m_) * v;
}

FunctionModel::FunctionModel(std::string name, Fn fn, double varsigma, double rho, int state_dim)
    : DynamicsModel(varsigma, rho, state_dim), name_(std::move(name)), fn_(std::move(fn)) {}

Eigen::VectorXd FunctionModel::eval(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    return fn_(t, x, v);
}

std::shared_ptr<const PendulumModel> pendulum(double g, double k, double l, double m, int state_dim) {
    if (!(l > 0.0)) throw std::invalid_argument("pendulum length l must be positive");
    if (!(m > 0.0)) throw std::invalid_argument("pendulum mass m must be positive");
    return std::make_shared<const PendulumModel>(g, k, l, m, state_dim);
}

DynamicsPtr zero_dynamics(int state_dim) {
    return std::make_shared<const FunctionModel>(
        "zero", [](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(x.size()); },
        0.0, 0.0, state_dim);
}

namespace {

double required_param(const std::map<std::string, double>& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) throw std::invalid_argument("pendulum parameter '" + key + "' is required");
    return it->second;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, DynamicsFactory> factories;

    Registry() {
        factories["pendulum"] = [](const std::map<std::string, double>& p, int dim) -> DynamicsPtr {
            for (const auto& [key, _] : p) {
                if (key != "g" && key != "k" && key != "l" && key != "m") {
                    throw std::invalid_argument("unknown pendulum parameter '" + key + "'");
                }
            }
            return pendulum(required_param(p, "g"), required_param(p, "k"), required_param(p, "l"),
                            required_param(p, "m"), dim);
        };
        factories["zero"] = [](const std::map<std::string, double>& p, int dim) -> DynamicsPtr {
            if (!p.empty()) throw std::invalid_argument("model 'zero' takes no parameters");
            return zero_dynamics(dim);
        };
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

void register_dynamics(const std::string& name, DynamicsFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

DynamicsPtr make_dynamics(const std::string& name, const std::map<std::string, double>& params, int state_dim) {
    auto& r = registry();
    DynamicsFactory factory;
    {
        std::lock_guard lock(r.mutex);
        const auto it = r.factories.find(name);
        if (it == r.factories.end()) {
            throw std::invalid_argument("unknown dynamics model '" + name + "'");
        }
        factory = it->second;
    }
    return factory(params, state_dim);
}

ValidationReport validate_assumption1(const DynamicsModel& model, const PositionBox& domain, int grid_points,
                                      double t) {
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    const int dim = model.state_dim();
    if (domain.lo.size() != dim || domain.hi.size() != dim) {
        throw std::invalid_argument("domain dimension does not match model state_dim");
    }

    // tensor grid, enumerated with a mixed-radix counter
    long total = 1;
    for (int a = 0; a < dim; ++a) total *= grid_points;
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::VectorXd> values;
    points.reserve(static_cast<std::size_t>(total));
    values.reserve(static_cast<std::size_t>(total));
    for (long idx = 0; idx < total; ++idx) {
        Eigen::VectorXd p(dim);
        long rem = idx;
        for (int a = 0; a < dim; ++a) {
            const long k = rem % grid_points;
            rem /= grid_points;
            p(a) = domain.lo(a) + (domain.hi(a) - domain.lo(a)) * static_cast<double>(k) / (grid_points - 1);
        }
        values.push_back(model.position_part(t, p));
        points.push_back(std::move(p));
    }

    ValidationReport report;
    report.claimed_rho = model.rho();
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double dx = (points[i] - points[j]).norm();
            if (dx == 0.0) continue;
            report.max_ratio = std::max(report.max_ratio, (values[i] - values[j]).norm() / dx);
            ++report.pairs_checked;
        }
    }
    report.lipschitz_ok = report.max_ratio <= model.rho() + 1e-9;

    const std::vector<double> v_samples{-2.0, -0.5, 0.0, 1.0, 3.0};
    for (const auto& p : points) {
        for (double va : v_samples) {
            for (double vb : v_samples) {
                const Eigen::VectorXd v1 = Eigen::VectorXd::Constant(dim, va);
                const Eigen::VectorXd v2 = Eigen::VectorXd::Constant(dim, vb);
                const double r =
                    (model.eval(t, p, v1) - model.eval(t, p, v2) - model.varsigma() * (v1 - v2)).norm();
                report.coupling_residual = std::max(report.coupling_residual, r);
            }
        }
    }
    report.coupling_ok = report.coupling_residual <= 1e-9;
    return report;
}

}  // namespace etcon
