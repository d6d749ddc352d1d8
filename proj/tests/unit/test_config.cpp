#include "oracles.hpp"

#include "etcon_app/config.hpp"

#include <catch_amalgamated.hpp>

#include <string>

using namespace etcon;
using namespace etcon::app;

namespace {

const std::filesystem::path kConfigs = ETCON_CONFIG_DIR;

const char* kMinimal = R"({
  "topology": {"format": "adjacency", "matrix": [[0, 1], [1, 0]], "leader_weights": [1, 0]},
  "dynamics": {"model": "pendulum", "params": {"g": 9.8, "k": 0.1, "l": 4, "m": 1}},
  "protocol": {"alpha": 1, "beta": 30, "gamma": 35, "delta": 13.67},
  "trigger": {"xi": 0.5},
  "simulation": {"t_end": 1, "h": 0.001},
  "initial_conditions": {"mode": "random", "seed": 3}
})";

nlohmann::json minimal() { return nlohmann::json::parse(kMinimal); }

std::string field_of(const nlohmann::json& doc) {
    try {
        (void)build_experiment(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

}  // namespace

TEST_CASE("bundled configs load") {
    const auto g1 = load_config(kConfigs / "g1.cfg");
    CHECK(g1.name == "g1");
    CHECK(g1.sim.topology.laplacian() == testing::g1_laplacian());
    CHECK(g1.sim.topology.leader_weights() == testing::g1_leader());
    CHECK(g1.sim.xi == testing::reference_xi());
    CHECK(g1.sim.protocol.beta == 30.0);
    CHECK(g1.sim.h == 1e-3);
    CHECK(g1.sim.t_end == 30.0);
    CHECK(g1.sim.init.seed == 2021);
    CHECK(g1.trajectory_stride == 10);
    REQUIRE(g1.lyapunov);
    CHECK(g1.lyapunov->omega == 40.0);
    CHECK((g1.lyapunov->c_hat * g1.sim.topology.h_matrix() - 0.05 * Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-12);

    const auto g2 = load_config(kConfigs / "g2.cfg");
    CHECK(g2.sim.topology.laplacian() == testing::g2_laplacian());
    CHECK(g2.sim.topology.leader_weights() == testing::g2_leader());

    const auto feasible = load_config(kConfigs / "g1_feasible.cfg");
    REQUIRE(feasible.lyapunov);
    CHECK(feasible.lyapunov->omega == 1000.0);
}

TEST_CASE("defaults of optional fields") {
    const auto exp = build_experiment(minimal());
    CHECK(exp.name == "experiment");
    CHECK(exp.sim.d_initial == Eigen::VectorXd::Ones(2));
    CHECK(exp.sim.protocol.c_initial == Eigen::VectorXd::Zero(2));
    CHECK(exp.sim.integrator == Integrator::Rk4);
    CHECK(exp.sim.trigger_mode == TriggerMode::Adaptive);
    CHECK(exp.sim.xi == Eigen::VectorXd::Constant(2, 0.5));
    CHECK_FALSE(exp.lyapunov);
    CHECK(exp.trajectory_stride == 1);
}

TEST_CASE("unknown keys are rejected with their path") {
    auto doc = minimal();
    doc["protocol"]["alpah"] = 1;
    CHECK(field_of(doc) == "protocol.alpah");

    doc = minimal();
    doc["extra"] = true;
    CHECK(field_of(doc) == "extra");
}

TEST_CASE("missing required fields name the field") {
    auto doc = minimal();
    doc.erase("topology");
    CHECK(field_of(doc) == "topology");

    doc = minimal();
    doc["protocol"].erase("gamma");
    CHECK(field_of(doc) == "protocol.gamma");
}

TEST_CASE("type and range errors") {
    auto doc = minimal();
    doc["protocol"]["alpha"] = "one";
    CHECK(field_of(doc) == "protocol.alpha");

    doc = minimal();
    doc["trigger"]["xi"] = {0.5, 0.5, 0.5};
    CHECK(field_of(doc) == "trigger.xi");

    doc = minimal();
    doc["simulation"]["integrator"] = "midpoint";
    CHECK(field_of(doc) == "simulation.integrator");

    doc = minimal();
    doc["topology"]["leader_weights"] = {0, 0};
    CHECK(field_of(doc) == "topology");

    doc = minimal();
    doc["simulation"]["h"] = -1;
    CHECK(field_of(doc) != "<accepted>");
}

TEST_CASE("syntax errors report a line") {
    const std::string text = "{\n  \"name\": \"x\",\n  \"topology\": ,\n}";
    try {
        (void)parse_config(text);
        FAIL("accepted malformed text");
    } catch (const ConfigError& e) {
        REQUIRE(e.line());
        CHECK(*e.line() == 3);
    }
}

TEST_CASE("comments are allowed") {
    const std::string text = std::string("// header\n") + kMinimal;
    CHECK_NOTHROW(parse_config(text));
}

TEST_CASE("override parsing") {
    const auto o = parse_override("protocol.alpha=2.5");
    CHECK(o.path == "protocol.alpha");
    CHECK(o.value == "2.5");
    CHECK(parse_override("name=a=b").value == "a=b");
    CHECK_THROWS_AS(parse_override("novalue"), ConfigError);
    CHECK_THROWS_AS(parse_override("=3"), ConfigError);
}

TEST_CASE("overrides replace values and are schema-checked") {
    const auto exp = parse_config(kMinimal, {parse_override("protocol.alpha=2.5"), parse_override("name=custom"),
                                             parse_override("trigger.xi=[0.1,0.2]")});
    CHECK(exp.sim.protocol.alpha == 2.5);
    CHECK(exp.name == "custom");
    CHECK(exp.sim.xi == Eigen::Vector2d(0.1, 0.2));
    CHECK(exp.document["protocol"]["alpha"] == 2.5);

    CHECK_THROWS_AS(parse_config(kMinimal, {parse_override("protocol.bogus=1")}), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal, {parse_override("name.inner=1")}), ConfigError);
}

TEST_CASE("bare seed override targets the initial conditions") {
    const auto exp = parse_config(kMinimal, {parse_override("seed=77")});
    CHECK(exp.sim.init.seed == 77);
}

TEST_CASE("explicit initial conditions") {
    auto doc = minimal();
    doc["initial_conditions"] = nlohmann::json::parse(
        R"({"mode": "explicit", "leader": {"x": 0.1, "v": -0.2}, "followers": {"x": [0.3, 0.4], "v": [0.5, 0.6]}})");
    const auto exp = build_experiment(doc);
    CHECK(exp.sim.init.kind == InitialConditions::Kind::Explicit);
    CHECK(exp.sim.init.x0(0) == 0.1);
    CHECK(exp.sim.init.v0(0) == -0.2);
    CHECK(exp.sim.init.x(1, 0) == 0.4);
    CHECK(exp.sim.init.v(0, 0) == 0.5);

    doc["initial_conditions"]["followers"]["x"] = {0.3};
    CHECK(field_of(doc) == "initial_conditions.followers.x");
}

TEST_CASE("trigger modes") {
    auto doc = minimal();
    doc["trigger"]["mode"] = "never";
    CHECK(build_experiment(doc).sim.trigger_mode == TriggerMode::Never);
    doc["trigger"]["mode"] = "always";
    CHECK(build_experiment(doc).sim.trigger_mode == TriggerMode::Always);
}

TEST_CASE("c_hat takes exactly one form") {
    auto doc = load_config(kConfigs / "g1.cfg").document;
    doc["lyapunov"]["c_hat"] = nlohmann::json::parse(R"({"diagonal": 0.2})");
    const auto exp = build_experiment(doc);
    CHECK(exp.lyapunov->c_hat == Eigen::MatrixXd(Eigen::VectorXd::Constant(6, 0.2).asDiagonal()));

    doc["lyapunov"]["c_hat"] = nlohmann::json::parse(R"({"diagonal": 0.2, "scaled_h_inverse": 0.05})");
    CHECK(field_of(doc) == "lyapunov.c_hat");
}
