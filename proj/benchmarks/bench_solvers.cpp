#include <benchmark/benchmark.h>

#include "nnd/transient.hpp"

namespace {

struct Case {
    nnd::Mesh mesh;
    nnd::PointwisePhysics physics;
    nnd::BoundarySpec bc;
};

Case holed_cube(int n) {
    nnd::DispersionParams p;
    p.alpha_L = 1.0;
    p.alpha_T = 0.001;
    Case c{nnd::generate_cube_with_hole(n, nnd::ElementKind::tet4),
           nnd::steady_diffusion(nnd::DiffusivityField::uniform_dispersion({1, 1, 1}, p), nnd::constant_field(0.0)),
           {}};
    c.bc.dirichlet[nnd::kOuterMarker] = nnd::constant_field(0.0);
    c.bc.dirichlet[nnd::kHoleMarker] = nnd::constant_field(1.0);
    return c;
}

void run_solver(benchmark::State& state, nnd::SolverChoice solver, double inner_rtol) {
    const auto c = holed_cube(static_cast<int>(state.range(0)));
    nnd::TransientConfig cfg;
    cfg.solver = solver;
    cfg.inner_rtol = inner_rtol;
    cfg.bounds = nnd::Bounds{0, 1};
    double ai = 0;
    std::size_t iterations = 0;
    for (auto _ : state) {
        const auto r = nnd::run(c.mesh, c.physics, c.bc, cfg);
        ai = static_cast<double>(r.solver_ledger.flops()) / static_cast<double>(r.solver_ledger.bytes());
        iterations = r.steps.back().iterations;
    }
    state.counters["ai"] = ai;
    state.counters["iterations"] = static_cast<double>(iterations);
}

void BM_Galerkin(benchmark::State& s) { run_solver(s, nnd::SolverChoice::galerkin, 0.1); }
void BM_Tron1(benchmark::State& s) { run_solver(s, nnd::SolverChoice::tron, 1e-1); }
void BM_Tron3(benchmark::State& s) { run_solver(s, nnd::SolverChoice::tron, 1e-3); }
void BM_Blmvm(benchmark::State& s) { run_solver(s, nnd::SolverChoice::blmvm, 0.1); }

BENCHMARK(BM_Galerkin)->Arg(9)->Arg(18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tron1)->Arg(9)->Arg(18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tron3)->Arg(9)->Arg(18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Blmvm)->Arg(9)->Arg(18)->Unit(benchmark::kMillisecond);

}  // namespace
