#include "etcon_app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace etcon::app {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& message, std::optional<int> line)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "config error";
          if (line) os << " at line " << *line;
          if (!field.empty()) os << " in '" << field << "'";
          os << ": " << message;
          return os.str();
      }()),
      field_(std::move(field)),
      line_(line) {}

namespace {

std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

/// Strict view over one JSON object: unknown keys are rejected on construction.
class Section {
public:
    Section(const json& node, std::string path, std::initializer_list<const char*> keys)
        : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_, "expected an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [key, _] : node_.items()) {
            if (!allowed.count(key)) throw ConfigError(join(path_, key), "unknown key");
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

    [[nodiscard]] const json& at(const std::string& key) const {
        if (!node_.contains(key)) throw ConfigError(join(path_, key), "required field missing");
        return node_.at(key);
    }

    [[nodiscard]] std::string path(const std::string& key) const { return join(path_, key); }

    [[nodiscard]] double number(const std::string& key) const { return as_number(at(key), path(key)); }

    [[nodiscard]] double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    [[nodiscard]] std::string string(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError(path(key), "expected a string");
        return v.get<std::string>();
    }

    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const {
        return has(key) ? string(key) : fallback;
    }

    [[nodiscard]] std::string choice(const std::string& key, const std::string& fallback,
                                     std::initializer_list<const char*> options) const {
        const std::string value = string(key, fallback);
        for (const char* o : options) {
            if (value == o) return value;
        }
        std::string list;
        for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
        throw ConfigError(path(key), "'" + value + "' is not one of: " + list);
    }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where, "expected a number");
        return v.get<double>();
    }

private:
    const json& node_;
    std::string path_;
};

Eigen::VectorXd vector_of(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where, "expected a list of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = Section::as_number(v[i], where + "[" + std::to_string(i) + "]");
    }
    return out;
}

/// A scalar is broadcast to n entries; a list must have exactly n.
Eigen::VectorXd scalar_or_vector(const json& v, const std::string& where, int n) {
    if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
    Eigen::VectorXd out = vector_of(v, where);
    if (out.size() != n) {
        throw ConfigError(where, "expected " + std::to_string(n) + " entries, got " + std::to_string(out.size()));
    }
    return out;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a non-empty list of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Eigen::MatrixXd out;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string rw = where + "[" + std::to_string(r) + "]";
        const Eigen::VectorXd row = vector_of(v[r], rw);
        if (r == 0) {
            cols = static_cast<std::size_t>(row.size());
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (static_cast<std::size_t>(row.size()) != cols) {
            throw ConfigError(rw, "ragged matrix row");
        }
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

/// Agent states: N x n. With n == 1 a flat list is accepted.
Eigen::MatrixXd agent_matrix(const json& v, const std::string& where, int n_agents, int dim) {
    Eigen::MatrixXd out;
    if (dim == 1 && v.is_array() && (v.empty() || v[0].is_number())) {
        out = vector_of(v, where);
    } else {
        out = matrix_of(v, where);
    }
    if (out.rows() != n_agents || out.cols() != dim) {
        throw ConfigError(where, "expected " + std::to_string(n_agents) + " x " + std::to_string(dim) + " values");
    }
    return out;
}

Topology parse_topology(const json& node) {
    const Section s(node, "topology", {"format", "matrix", "leader_weights"});
    const std::string format = s.choice("format", "adjacency", {"adjacency", "laplacian"});
    const Eigen::MatrixXd m = matrix_of(s.at("matrix"), s.path("matrix"));
    const Eigen::VectorXd k = vector_of(s.at("leader_weights"), s.path("leader_weights"));
    try {
        return format == "laplacian" ? topology_from_laplacian(m, k) : build_topology(m, k);
    } catch (const TopologyError& e) {
        throw ConfigError("topology", e.what());
    }
}

DynamicsPtr parse_dynamics(const json& node) {
    const Section s(node, "dynamics", {"model", "params", "state_dim"});
    const std::string model = s.string("model");
    std::map<std::string, double> params;
    if (s.has("params")) {
        const auto& p = s.at("params");
        if (!p.is_object()) throw ConfigError(s.path("params"), "expected an object");
        for (const auto& [key, value] : p.items()) {
            params[key] = Section::as_number(value, s.path("params") + "." + key);
        }
    }
    const double dim = s.number("state_dim", 1.0);
    if (dim < 1 || dim != std::floor(dim)) throw ConfigError(s.path("state_dim"), "expected a positive integer");
    try {
        return make_dynamics(model, params, static_cast<int>(dim));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("dynamics", e.what());
    }
}

ProtocolParams parse_protocol(const json& node, int n_agents) {
    const Section s(node, "protocol", {"alpha", "beta", "gamma", "delta", "c_initial", "gain_law"});
    ProtocolParams p;
    p.alpha = s.number("alpha");
    p.beta = s.number("beta");
    p.gamma = s.number("gamma");
    p.delta = s.number("delta");
    p.c_initial = s.has("c_initial") ? scalar_or_vector(s.at("c_initial"), s.path("c_initial"), n_agents)
                                     : Eigen::VectorXd::Zero(n_agents);
    p.gain_law = s.choice("gain_law", "as_printed", {"as_printed", "sampled"}) == "sampled" ? GainLawMode::Sampled
                                                                                           : GainLawMode::AsPrinted;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("protocol", e.what());
    }
    return p;
}

InitialConditions parse_initial(const json& node, int n_agents, int dim) {
    InitialConditions init;
    if (!node.is_object()) throw ConfigError("initial_conditions", "expected an object");
    const std::string mode = node.value("mode", std::string("random"));
    if (mode == "random") {
        const Section s(node, "initial_conditions", {"mode", "lo", "hi", "seed"});
        init.kind = InitialConditions::Kind::Random;
        init.lo = s.number("lo", -1.0);
        init.hi = s.number("hi", 1.0);
        const auto& seed = s.at("seed");
        if (!seed.is_number_integer() || seed.get<long long>() < 0) {
            throw ConfigError(s.path("seed"), "expected a non-negative integer");
        }
        init.seed = seed.get<std::uint64_t>();
        if (!(init.lo < init.hi)) throw ConfigError("initial_conditions", "lo must be below hi");
    } else if (mode == "explicit") {
        const Section s(node, "initial_conditions", {"mode", "leader", "followers"});
        init.kind = InitialConditions::Kind::Explicit;
        const Section leader(s.at("leader"), s.path("leader"), {"x", "v"});
        init.x0 = scalar_or_vector(leader.at("x"), leader.path("x"), dim);
        init.v0 = scalar_or_vector(leader.at("v"), leader.path("v"), dim);
        const Section followers(s.at("followers"), s.path("followers"), {"x", "v"});
        init.x = agent_matrix(followers.at("x"), followers.path("x"), n_agents, dim);
        init.v = agent_matrix(followers.at("v"), followers.path("v"), n_agents, dim);
    } else {
        throw ConfigError("initial_conditions.mode", "'" + mode + "' is not one of: random, explicit");
    }
    return init;
}

LyapunovParams parse_lyapunov(const json& node, const Topology& topo) {
    const Section s(node, "lyapunov",
                    {"mu", "varpi", "eta", "omega", "delta_d", "c_hat", "d_hat", "kappa", "varsigma", "rho",
                     "mu_ratio_min", "eta_ratio_rel_tol"});
    const int n = topo.n_followers();
    LyapunovParams p;
    p.mu = s.number("mu");
    p.varpi = s.number("varpi");
    p.eta = s.number("eta");
    p.omega = s.number("omega");
    p.varsigma = s.number("varsigma");
    p.rho = s.number("rho");
    p.delta_d = scalar_or_vector(s.at("delta_d"), s.path("delta_d"), n);
    if (s.has("d_hat")) p.d_hat = scalar_or_vector(s.at("d_hat"), s.path("d_hat"), n);
    if (s.has("kappa")) p.kappa = s.number("kappa");
    p.mu_ratio_min = s.number("mu_ratio_min", p.mu_ratio_min);
    p.eta_ratio_rel_tol = s.number("eta_ratio_rel_tol", p.eta_ratio_rel_tol);

    const Section c(s.at("c_hat"), s.path("c_hat"), {"scaled_h_inverse", "diagonal", "matrix"});
    int forms = 0;
    if (c.has("scaled_h_inverse")) {
        ++forms;
        const auto facts = spectral_certificate(topo);
        if (!facts.h_positive_definite) throw ConfigError(c.path("scaled_h_inverse"), "H is not invertible");
        p.c_hat = c.number("scaled_h_inverse") * topo.h_matrix().inverse();
    }
    if (c.has("diagonal")) {
        ++forms;
        p.c_hat = scalar_or_vector(c.at("diagonal"), c.path("diagonal"), n).asDiagonal();
    }
    if (c.has("matrix")) {
        ++forms;
        p.c_hat = matrix_of(c.at("matrix"), c.path("matrix"));
        if (p.c_hat.rows() != n || p.c_hat.cols() != n) throw ConfigError(c.path("matrix"), "expected N x N");
    }
    if (forms != 1) throw ConfigError(s.path("c_hat"), "exactly one of scaled_h_inverse, diagonal, matrix");
    return p;
}

int line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

Override parse_override(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError(std::string(spec), "override must look like key.path=value");
    }
    return Override{std::string(spec.substr(0, eq)), std::string(spec.substr(eq + 1))};
}

void apply_overrides(json& doc, const std::vector<Override>& overrides) {
    for (const auto& o : overrides) {
        json* node = &doc;
        // bare "seed" is shorthand for the random initial-condition seed
        std::string_view path = o.path == "seed" ? std::string_view("initial_conditions.seed") : o.path;
        while (true) {
            const auto dot = path.find('.');
            const std::string key(path.substr(0, dot));
            if (key.empty()) throw ConfigError(o.path, "empty path component");
            if (!node->is_object()) throw ConfigError(o.path, "cannot descend into a non-object");
            node = &(*node)[key];
            if (dot == std::string_view::npos) break;
            path.remove_prefix(dot + 1);
        }
        json value = json::parse(o.value, nullptr, false);
        *node = value.is_discarded() ? json(o.value) : std::move(value);
    }
}

ExperimentConfig build_experiment(const json& doc) {
    const Section root(doc, "",
                       {"name", "topology", "dynamics", "protocol", "trigger", "simulation", "initial_conditions",
                        "lyapunov", "output"});
    ExperimentConfig exp;
    exp.document = doc;
    exp.name = root.string("name", "experiment");

    SimConfig& sim = exp.sim;
    sim.topology = parse_topology(root.at("topology"));
    const int n = sim.topology.n_followers();
    sim.dynamics = parse_dynamics(root.at("dynamics"));
    sim.protocol = parse_protocol(root.at("protocol"), n);

    const Section trig(root.at("trigger"), "trigger", {"xi", "d_initial", "mode"});
    sim.xi = scalar_or_vector(trig.at("xi"), trig.path("xi"), n);
    sim.d_initial =
        trig.has("d_initial") ? scalar_or_vector(trig.at("d_initial"), trig.path("d_initial"), n) : Eigen::VectorXd::Ones(n);
    const std::string mode = trig.choice("mode", "adaptive", {"adaptive", "never", "always"});
    sim.trigger_mode = mode == "never" ? TriggerMode::Never : mode == "always" ? TriggerMode::Always : TriggerMode::Adaptive;

    const Section simu(root.at("simulation"), "simulation", {"t0", "t_end", "h", "integrator"});
    sim.t0 = simu.number("t0", 0.0);
    sim.t_end = simu.number("t_end");
    sim.h = simu.number("h");
    sim.integrator = simu.choice("integrator", "rk4", {"rk4", "euler"}) == "euler" ? Integrator::Euler : Integrator::Rk4;

    sim.init = parse_initial(root.at("initial_conditions"), n, sim.dynamics->state_dim());

    if (root.has("lyapunov")) exp.lyapunov = parse_lyapunov(root.at("lyapunov"), sim.topology);

    if (root.has("output")) {
        const Section out(root.at("output"), "output", {"trajectory_stride"});
        const double stride = out.number("trajectory_stride", 1.0);
        if (stride < 1 || stride != std::floor(stride)) {
            throw ConfigError(out.path("trajectory_stride"), "expected a positive integer");
        }
        exp.trajectory_stride = static_cast<int>(stride);
    }

    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    return exp;
}

ExperimentConfig parse_config(std::string_view text, const std::vector<Override>& overrides) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("", e.what(), line_of(text, e.byte));
    }
    apply_overrides(doc, overrides);
    return build_experiment(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

}  // namespace etcon::app
