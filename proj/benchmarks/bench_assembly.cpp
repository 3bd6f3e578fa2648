#include <benchmark/benchmark.h>

#include "nnd/fem.hpp"

namespace {

nnd::PointwisePhysics anisotropic() {
    nnd::DispersionParams p;
    p.alpha_L = 1.0;
    p.alpha_T = 0.001;
    return nnd::steady_diffusion(nnd::DiffusivityField::uniform_dispersion({1, 1, 1}, p), nnd::constant_field(0.0));
}

void BM_AssembleJacobian(benchmark::State& state) {
    const auto kind = state.range(1) ? nnd::ElementKind::hex8 : nnd::ElementKind::tet4;
    const auto mesh = nnd::generate_cube_with_hole(static_cast<int>(state.range(0)), kind);
    const auto physics = anisotropic();
    for (auto _ : state) benchmark::DoNotOptimize(nnd::assemble_jacobian(mesh, physics, {}, {}, 0, 0));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * mesh.num_cells()));
}
BENCHMARK(BM_AssembleJacobian)->Args({9, 0})->Args({18, 0})->Args({9, 1})->Args({18, 1})->Unit(benchmark::kMillisecond);

void BM_AssembleThreads(benchmark::State& state) {
    const auto mesh = nnd::generate_cube_with_hole(18, nnd::ElementKind::tet4);
    const auto physics = anisotropic();
    nnd::AssemblyOptions opts;
    opts.threads = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(nnd::assemble_jacobian(mesh, physics, {}, {}, 0, 0, opts));
}
BENCHMARK(BM_AssembleThreads)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
