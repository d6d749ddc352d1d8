#include "etcon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace etcon {

long SimConfig::steps() const {
    return std::llround((t_end - t0) / h);
}

void SimConfig::validate() const {
    const int n_agents = topology.n_followers();
    if (n_agents < 1) throw std::invalid_argument("topology has no followers");
    if (!dynamics) throw std::invalid_argument("dynamics model missing");
    protocol.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size h must be positive");
    if (!(t_end - t0 >= h)) throw std::invalid_argument("t_end must be at least t0 + h");
    const double span = t_end - t0;
    if (std::abs(static_cast<double>(steps()) * h - span) > 1e-9 * std::max(1.0, span)) {
        throw std::invalid_argument("horizon t_end - t0 must be an integer multiple of h");
    }
    auto sized = [n_agents](const Eigen::VectorXd& v, const char* what) {
        if (v.size() != n_agents) {
            throw std::invalid_argument(std::string(what) + " must have one entry per follower");
        }
    };
    sized(xi, "xi");
    sized(d_initial, "d_initial");
    sized(protocol.c_initial, "c_initial");
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        if (!(xi(i) > 0.0)) throw std::invalid_argument("xi entries must be positive");
    }
    const int n = state_dim();
    if (init.kind == InitialConditions::Kind::Explicit) {
        if (init.x.rows() != n_agents || init.v.rows() != n_agents || init.x.cols() != n || init.v.cols() != n) {
            throw std::invalid_argument("explicit follower initial state must be N x state_dim");
        }
        if (init.x0.size() != n || init.v0.size() != n) {
            throw std::invalid_argument("explicit leader initial state must have state_dim entries");
        }
    } else if (!(init.lo < init.hi)) {
        throw std::invalid_argument("random initial range requires lo < hi");
    }
}

ResolvedInitialState resolve_initial_conditions(const SimConfig& cfg) {
    const int n_agents = cfg.n_followers();
    const int n = cfg.state_dim();
    ResolvedInitialState out;
    if (cfg.init.kind == InitialConditions::Kind::Explicit) {
        out.x = cfg.init.x;
        out.v = cfg.init.v;
        out.x0 = cfg.init.x0;
        out.v0 = cfg.init.v0;
        return out;
    }
    std::mt19937_64 gen(cfg.init.seed);
    const double lo = cfg.init.lo;
    const double span = cfg.init.hi - cfg.init.lo;
    auto draw = [&] { return lo + span * (static_cast<double>(gen() >> 11) * 0x1.0p-53); };
    out.x0.resize(n);
    out.v0.resize(n);
    for (int a = 0; a < n; ++a) out.x0(a) = draw();
    for (int a = 0; a < n; ++a) out.v0(a) = draw();
    out.x.resize(n_agents, n);
    out.v.resize(n_agents, n);
    for (int i = 0; i < n_agents; ++i) {
        for (int a = 0; a < n; ++a) out.x(i, a) = draw();
        for (int a = 0; a < n; ++a) out.v(i, a) = draw();
    }
    return out;
}

AgentState SystemState::agent(int i) const {
    return AgentState{x.row(i).transpose(), v.row(i).transpose(), w.row(i).transpose(), c(i)};
}

DivergenceError::DivergenceError(int agent, double time, std::string component, double value)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "divergence at t=" << time << ": " << (agent < 0 ? std::string("leader") : "agent " + std::to_string(agent + 1))
             << " component " << component << " = " << value;
          return os.str();
      }()),
      agent_(agent),
      time_(time),
      component_(std::move(component)),
      value_(value) {}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int n_agents = cfg_.n_followers();
    const int n = cfg_.state_dim();
    const auto init = resolve_initial_conditions(cfg_);

    state_.t = cfg_.t0;
    state_.x = init.x;
    state_.v = init.v;
    state_.w = Eigen::MatrixXd::Zero(n_agents, n);
    state_.c = cfg_.protocol.c_initial;
    state_.d = cfg_.d_initial;
    state_.x0 = init.x0;
    state_.v0 = init.v0;

    // every agent broadcasts once at t0 so all stores are populated
    state_.stores.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i) {
        state_.stores.push_back(make_store(cfg_.topology, i, state_.x.row(i).transpose(), cfg_.t0));
        initial_.push_back(BroadcastMsg{i, state_.x.row(i).transpose(), cfg_.t0});
    }
    for (const auto& msg : initial_) {
        for (auto& store : state_.stores) receive(store, cfg_.topology, msg);
    }
}

Eigen::VectorXd Simulator::combined_term(int i, const Eigen::VectorXd& x0) const {
    return etcon::combined_term(state_.stores[static_cast<std::size_t>(i)], cfg_.topology, i, x0);
}

Eigen::VectorXd Simulator::control(int i) const {
    return control_input(state_.agent(i), combined_term(i, state_.x0), cfg_.protocol);
}

double Simulator::gain_rate(int i) const {
    const auto a = state_.agent(i);
    const auto s = combined_term(i, state_.x0);
    const Eigen::VectorXd x_tilde = cfg_.protocol.gain_law == GainLawMode::AsPrinted
                                        ? Eigen::VectorXd(a.x - state_.x0)
                                        : Eigen::VectorXd(state_.stores[static_cast<std::size_t>(i)].own_broadcast - state_.x0);
    return c_rate(a, x_tilde, s, cfg_.protocol);
}

TriggerPhase Simulator::evaluate_triggers() {
    const int n_agents = cfg_.n_followers();
    TriggerPhase phase;
    phase.t = state_.t;
    phase.samples.resize(static_cast<std::size_t>(n_agents));

    std::vector<int> firing;
    for (int i = 0; i < n_agents; ++i) {
        auto& sample = phase.samples[static_cast<std::size_t>(i)];
        const auto& store = state_.stores[static_cast<std::size_t>(i)];
        const Eigen::VectorXd xi_now = state_.x.row(i).transpose();
        const Eigen::VectorXd s = etcon::combined_term(store, cfg_.topology, i, state_.x0);
        const Eigen::VectorXd e_x = store.measurement_error(xi_now);
        sample.error_sq = e_x.squaredNorm();
        sample.threshold = trigger_threshold(state_.d(i), s);
        sample.e_value = sample.error_sq - sample.threshold;
        sample.guard_held = e_x.norm() < kEquilibriumGuard && s.norm() < kEquilibriumGuard;

        // an agent never broadcasts twice at the same instant
        if (store.own_broadcast_time == state_.t) continue;

        switch (cfg_.trigger_mode) {
            case TriggerMode::Adaptive: sample.fired = should_fire(sample.e_value, e_x, s); break;
            case TriggerMode::Always: sample.fired = true; break;
            case TriggerMode::Never: sample.fired = false; break;
        }
        if (sample.fired) firing.push_back(i);
    }

    for (int i : firing) {
        auto& store = state_.stores[static_cast<std::size_t>(i)];
        phase.broadcasts.push_back(on_fire(store, i, state_.x.row(i).transpose(), state_.t));
    }
    for (const auto& msg : phase.broadcasts) {
        for (auto& store : state_.stores) receive(store, cfg_.topology, msg);
    }
    return phase;
}

namespace {

struct Layout {
    int agents;
    int dim;
    [[nodiscard]] Eigen::Index x(int i) const { return static_cast<Eigen::Index>(i) * dim; }
    [[nodiscard]] Eigen::Index v(int i) const { return static_cast<Eigen::Index>(agents + i) * dim; }
    [[nodiscard]] Eigen::Index w(int i) const { return static_cast<Eigen::Index>(2 * agents + i) * dim; }
    [[nodiscard]] Eigen::Index c(int i) const { return static_cast<Eigen::Index>(3 * agents) * dim + i; }
    [[nodiscard]] Eigen::Index d(int i) const { return static_cast<Eigen::Index>(3 * agents) * dim + agents + i; }
    [[nodiscard]] Eigen::Index x0() const { return static_cast<Eigen::Index>(3 * agents) * dim + 2 * agents; }
    [[nodiscard]] Eigen::Index v0() const { return x0() + dim; }
    [[nodiscard]] Eigen::Index size() const { return v0() + dim; }
};

}  // namespace

Eigen::VectorXd Simulator::pack() const {
    const Layout lay{cfg_.n_followers(), cfg_.state_dim()};
    Eigen::VectorXd y(lay.size());
    for (int i = 0; i < lay.agents; ++i) {
        y.segment(lay.x(i), lay.dim) = state_.x.row(i).transpose();
        y.segment(lay.v(i), lay.dim) = state_.v.row(i).transpose();
        y.segment(lay.w(i), lay.dim) = state_.w.row(i).transpose();
        y(lay.c(i)) = state_.c(i);
        y(lay.d(i)) = state_.d(i);
    }
    y.segment(lay.x0(), lay.dim) = state_.x0;
    y.segment(lay.v0(), lay.dim) = state_.v0;
    return y;
}

void Simulator::unpack(const Eigen::VectorXd& y) {
    const Layout lay{cfg_.n_followers(), cfg_.state_dim()};
    for (int i = 0; i < lay.agents; ++i) {
        state_.x.row(i) = y.segment(lay.x(i), lay.dim).transpose();
        state_.v.row(i) = y.segment(lay.v(i), lay.dim).transpose();
        state_.w.row(i) = y.segment(lay.w(i), lay.dim).transpose();
        state_.c(i) = y(lay.c(i));
        state_.d(i) = y(lay.d(i));
    }
    state_.x0 = y.segment(lay.x0(), lay.dim);
    state_.v0 = y.segment(lay.v0(), lay.dim);
}

Eigen::VectorXd Simulator::derivative(double t, const Eigen::VectorXd& y) const {
    const Layout lay{cfg_.n_followers(), cfg_.state_dim()};
    const auto& f = *cfg_.dynamics;
    const auto& p = cfg_.protocol;
    Eigen::VectorXd dy(lay.size());

    const Eigen::VectorXd x0 = y.segment(lay.x0(), lay.dim);
    const Eigen::VectorXd v0 = y.segment(lay.v0(), lay.dim);
    for (int i = 0; i < lay.agents; ++i) {
        const auto& store = state_.stores[static_cast<std::size_t>(i)];
        AgentState a{y.segment(lay.x(i), lay.dim), y.segment(lay.v(i), lay.dim), y.segment(lay.w(i), lay.dim),
                     y(lay.c(i))};
        // held samples; only the leader term moves inside the step
        const Eigen::VectorXd s = etcon::combined_term(store, cfg_.topology, i, x0);
        const Eigen::VectorXd x_tilde =
            p.gain_law == GainLawMode::AsPrinted ? Eigen::VectorXd(a.x - x0) : Eigen::VectorXd(store.own_broadcast - x0);

        dy.segment(lay.x(i), lay.dim) = a.v;
        dy.segment(lay.v(i), lay.dim) = f.eval(t, a.x, a.v) + control_input(a, s, p);
        dy.segment(lay.w(i), lay.dim) = estimator_rate(a, s, p);
        dy(lay.c(i)) = c_rate(a, x_tilde, s, p);
        dy(lay.d(i)) = d_rate(s, cfg_.xi(i));
    }
    dy.segment(lay.x0(), lay.dim) = v0;
    dy.segment(lay.v0(), lay.dim) = f.eval(t, x0, v0);
    return dy;
}

void Simulator::integrate() {
    const double t = state_.t;
    const double h = cfg_.h;
    const Eigen::VectorXd y = pack();
    Eigen::VectorXd next;
    if (cfg_.integrator == Integrator::Euler) {
        next = y + h * derivative(t, y);
    } else {
        const Eigen::VectorXd k1 = derivative(t, y);
        const Eigen::VectorXd k2 = derivative(t + 0.5 * h, y + 0.5 * h * k1);
        const Eigen::VectorXd k3 = derivative(t + 0.5 * h, y + 0.5 * h * k2);
        const Eigen::VectorXd k4 = derivative(t + h, y + h * k3);
        next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    unpack(next);
    ++step_;
    state_.t = cfg_.t0 + static_cast<double>(step_) * h;
    check_finite();
}

TriggerPhase Simulator::step() {
    auto phase = evaluate_triggers();
    integrate();
    return phase;
}

void Simulator::check_finite() const {
    auto bad = [](double value) { return !std::isfinite(value) || std::abs(value) > kDivergenceBound; };
    const int n = cfg_.state_dim();
    for (int i = 0; i < cfg_.n_followers(); ++i) {
        for (int a = 0; a < n; ++a) {
            const std::string idx = "[" + std::to_string(a) + "]";
            if (bad(state_.x(i, a))) throw DivergenceError(i, state_.t, "x" + idx, state_.x(i, a));
            if (bad(state_.v(i, a))) throw DivergenceError(i, state_.t, "v" + idx, state_.v(i, a));
            if (bad(state_.w(i, a))) throw DivergenceError(i, state_.t, "w" + idx, state_.w(i, a));
        }
        if (bad(state_.c(i))) throw DivergenceError(i, state_.t, "c", state_.c(i));
        if (bad(state_.d(i))) throw DivergenceError(i, state_.t, "d", state_.d(i));
    }
    for (int a = 0; a < n; ++a) {
        const std::string idx = "[" + std::to_string(a) + "]";
        if (bad(state_.x0(a))) throw DivergenceError(-1, state_.t, "x" + idx, state_.x0(a));
        if (bad(state_.v0(a))) throw DivergenceError(-1, state_.t, "v" + idx, state_.v0(a));
    }
}

namespace {

void record_row(RunRecord& rec, long k, const Simulator& sim) {
    const auto& s = sim.state();
    const int n = rec.state_dim;
    rec.times[static_cast<std::size_t>(k)] = s.t;
    for (int i = 0; i < rec.n_followers; ++i) {
        rec.x.row(k).segment(i * n, n) = s.x.row(i);
        rec.v.row(k).segment(i * n, n) = s.v.row(i);
        rec.w.row(k).segment(i * n, n) = s.w.row(i);
        rec.u.row(k).segment(i * n, n) = sim.control(i).transpose();
    }
    rec.c.row(k) = s.c.transpose();
    rec.d.row(k) = s.d.transpose();
    rec.x0.row(k) = s.x0.transpose();
    rec.v0.row(k) = s.v0.transpose();
}

void truncate(RunRecord& rec, long rows) {
    rec.times.resize(static_cast<std::size_t>(rows));
    for (auto* m : {&rec.x, &rec.v, &rec.w, &rec.u, &rec.c, &rec.d, &rec.x0, &rec.v0}) {
        m->conservativeResize(rows, Eigen::NoChange);
    }
}

}  // namespace

RunRecord run(const SimConfig& cfg) {
    Simulator sim(cfg);
    const auto& conf = sim.config();
    const long steps = conf.steps();
    const long rows = steps + 1;
    const int n_agents = conf.n_followers();
    const int n = conf.state_dim();

    RunRecord rec;
    rec.n_followers = n_agents;
    rec.state_dim = n;
    rec.h = conf.h;
    rec.seed = conf.init.seed;
    rec.times.resize(static_cast<std::size_t>(rows));
    for (auto* m : {&rec.x, &rec.v, &rec.w, &rec.u}) m->resize(rows, n_agents * n);
    rec.c.resize(rows, n_agents);
    rec.d.resize(rows, n_agents);
    rec.x0.resize(rows, n);
    rec.v0.resize(rows, n);

    for (const auto& msg : sim.initial_broadcasts()) {
        rec.events.push_back(EventRecord{msg.time, msg.sender, 0, msg.position, sim.state().d(msg.sender)});
    }

    for (long k = 0; k < steps; ++k) {
        const auto phase = sim.evaluate_triggers();
        ++rec.steps_evaluated;
        for (const auto& msg : phase.broadcasts) {
            rec.events.push_back(EventRecord{msg.time, msg.sender, k, msg.position, sim.state().d(msg.sender)});
        }
        record_row(rec, k, sim);
        try {
            sim.integrate();
        } catch (const DivergenceError& e) {
            rec.status = RunStatus::Diverged;
            rec.diagnostic = e.what();
            truncate(rec, k + 1);
            rec.summary = summarize(rec);
            return rec;
        }
    }
    record_row(rec, steps, sim);
    rec.summary = summarize(rec);
    return rec;
}

std::vector<std::optional<double>> min_inter_event_gap(const RunRecord& record) {
    std::vector<std::optional<double>> gaps(static_cast<std::size_t>(record.n_followers));
    std::vector<std::optional<double>> last(static_cast<std::size_t>(record.n_followers));
    for (const auto& e : record.events) {
        auto& prev = last[static_cast<std::size_t>(e.agent)];
        if (prev) {
            const double gap = e.t - *prev;
            auto& g = gaps[static_cast<std::size_t>(e.agent)];
            g = g ? std::min(*g, gap) : gap;
        }
        prev = e.t;
    }
    return gaps;
}

std::vector<double> triggered_fraction(const RunRecord& record) {
    std::vector<double> counts(static_cast<std::size_t>(record.n_followers), 0.0);
    for (const auto& e : record.events) counts[static_cast<std::size_t>(e.agent)] += 1.0;
    const double denom = std::max<long>(record.steps_evaluated, 1);
    for (auto& c : counts) c /= denom;
    return counts;
}

RunSummary summarize(const RunRecord& record) {
    RunSummary s;
    const int n_agents = record.n_followers;
    const int n = record.state_dim;
    s.final_position_error = Eigen::VectorXd::Zero(n_agents);
    s.final_velocity_error = Eigen::VectorXd::Zero(n_agents);
    if (record.length() > 0) {
        const long k = record.length() - 1;
        for (int i = 0; i < n_agents; ++i) {
            s.final_position_error(i) = (record.x.row(k).segment(i * n, n) - record.x0.row(k)).norm();
            s.final_velocity_error(i) = (record.v.row(k).segment(i * n, n) - record.v0.row(k)).norm();
        }
    }
    s.event_counts.assign(static_cast<std::size_t>(n_agents), 0);
    for (const auto& e : record.events) ++s.event_counts[static_cast<std::size_t>(e.agent)];
    s.min_gap = min_inter_event_gap(record);
    return s;
}

}  // namespace etcon
