#include "etcon/analysis.hpp"
#include "etcon/simulator.hpp"
#include "etcon/topology.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace etcon;

Topology g1() {
    Eigen::MatrixXd l(6, 6);
    l << 6, -1, -2, -1, -2, 0,
        -1, 8, -3, 0, 0, -4,
        -2, -3, 5, 0, 0, 0,
        -1, 0, 0, 4, -3, 0,
        -2, 0, 0, -3, 6, -1,
        0, -4, 0, 0, -1, 5;
    return topology_from_laplacian(l, (Eigen::VectorXd(6) << 2, 0, 0, 0, 0, 0).finished());
}

/// Ring of n followers with the leader pinned to agent 0.
Topology ring(int n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) w(i, (i + 1) % n) = w((i + 1) % n, i) = 1.0;
    Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
    k(0) = 1.0;
    return build_topology(w, k);
}

SimConfig reference(const Topology& topo, double t_end) {
    SimConfig cfg;
    cfg.topology = topo;
    cfg.dynamics = pendulum(9.8, 0.1, 4.0, 1.0);
    cfg.protocol.c_initial = Eigen::VectorXd::Zero(topo.n_followers());
    cfg.xi = Eigen::VectorXd::Constant(topo.n_followers(), 0.4);
    cfg.d_initial = Eigen::VectorXd::Ones(topo.n_followers());
    cfg.t_end = t_end;
    cfg.init.seed = 2021;
    return cfg;
}

LyapunovParams lyapunov(const Topology& topo) {
    LyapunovParams p;
    p.c_hat = 0.05 * topo.h_matrix().inverse();
    p.delta_d = Eigen::VectorXd::Constant(topo.n_followers(), 0.5);
    return p;
}

void BM_Step(benchmark::State& state) {
    auto cfg = reference(ring(static_cast<int>(state.range(0))), 1e6);
    Simulator sim(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_Step)->Arg(6)->Arg(24)->Arg(96);

void BM_ReferenceRun(benchmark::State& state) {
    const auto cfg = reference(g1(), 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(run(cfg));
}
BENCHMARK(BM_ReferenceRun)->Unit(benchmark::kMillisecond);

void BM_SpectralCertificate(benchmark::State& state) {
    const auto topo = ring(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(spectral_certificate(topo));
}
BENCHMARK(BM_SpectralCertificate)->Arg(6)->Arg(32)->Arg(128);

void BM_AssemblePi(benchmark::State& state) {
    const auto topo = ring(static_cast<int>(state.range(0)));
    const auto p = lyapunov(topo);
    const ProtocolParams params;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_pi(p, params, topo));
}
BENCHMARK(BM_AssemblePi)->Arg(6)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
