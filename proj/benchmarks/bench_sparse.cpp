#include <benchmark/benchmark.h>

#include "nnd/fem.hpp"
#include "nnd/precond.hpp"

namespace {

nnd::CsrMatrix stiffness(int n) {
    const auto mesh = nnd::generate_cube_with_hole(n, nnd::ElementKind::tet4);
    const auto physics = nnd::steady_diffusion(nnd::DiffusivityField::constant(nnd::identity3()),
                                               nnd::constant_field(0.0));
    return nnd::assemble_jacobian(mesh, physics, {}, {}, 0, 0);
}

void BM_Spmv(benchmark::State& state) {
    const auto a = stiffness(static_cast<int>(state.range(0)));
    std::vector<double> x(a.cols(), 1.0), y(a.rows());
    nnd::OpLedger ledger;
    for (auto _ : state) {
        nnd::spmv(a, x, y, ledger);
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["bytes_per_call"] = static_cast<double>(nnd::spmv_bytes(a.rows(), a.nnz()));
    state.SetBytesProcessed(static_cast<std::int64_t>(ledger.bytes()));
}
BENCHMARK(BM_Spmv)->Arg(9)->Arg(18)->Arg(36);

void BM_Axpy(benchmark::State& state) {
    std::vector<double> x(static_cast<std::size_t>(state.range(0)), 1.0), y(x.size(), 2.0);
    nnd::OpLedger ledger;
    for (auto _ : state) {
        nnd::vec::axpy(y, 1e-3, x, ledger);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(ledger.bytes()));
}
BENCHMARK(BM_Axpy)->Range(1 << 10, 1 << 20);

void BM_Ilu0Apply(benchmark::State& state) {
    const auto a = stiffness(static_cast<int>(state.range(0)));
    const nnd::Ilu0Preconditioner pc(a);
    std::vector<double> r(a.rows(), 1.0), z(a.rows());
    nnd::OpLedger ledger;
    for (auto _ : state) {
        pc.apply(r, z, ledger);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(ledger.bytes()));
}
BENCHMARK(BM_Ilu0Apply)->Arg(9)->Arg(18);

}  // namespace
