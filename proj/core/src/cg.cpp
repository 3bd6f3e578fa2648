#include "nnd/cg.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "nnd/error.hpp"

namespace nnd {

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max-iter";
        case SolveStatus::breakdown: return "numerical-breakdown";
    }
    return "?";
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& pc,
                  const CgOptions& options, std::span<const double> x0, OpLedger& ledger) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw DimensionError("cg_solve: dimension mismatch");
    if (!x0.empty() && x0.size() != n) throw DimensionError("cg_solve: x0 has wrong length");

    const OpLedger start = ledger;
    const auto t0 = std::chrono::steady_clock::now();
    CgResult out;
    auto& rep = out.report;
    auto finish = [&](SolveStatus status) {
        rep.status = status;
        rep.ledger = ledger.since(start);
        rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::move(out);
    };

    out.x.assign(n, 0.0);
    const double bnorm = vec::norm2(b, ledger);
    if (bnorm == 0.0) {
        rep.residual_history.push_back(0.0);
        return finish(SolveStatus::converged);
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    if (!x0.empty()) {
        vec::copy(x0, out.x, ledger);
        spmv(a, out.x, r, ledger);
        vec::aypx(r, -1.0, b, ledger);
    } else {
        vec::copy(b, r, ledger);
    }
    const double tol = options.rtol * bnorm;
    double rnorm = vec::norm2(r, ledger);
    rep.residual_history.push_back(rnorm);
    if (rnorm <= tol) return finish(SolveStatus::converged);

    pc.apply(r, z, ledger);
    vec::copy(z, p, ledger);
    double rz = vec::dot(r, z, ledger);
    if (!(rz > 0)) throw NumericalError("cg_solve: preconditioner is not positive definite (r^T z <= 0)");

    while (rep.iterations < options.max_iterations) {
        spmv(a, p, q, ledger);
        const double pq = vec::dot(p, q, ledger);
        if (!(pq > 0))
            throw NumericalError("cg_solve: operator is not positive definite (p^T A p <= 0) at iteration " +
                                 std::to_string(rep.iterations));
        const double alpha = rz / pq;
        vec::axpy(out.x, alpha, p, ledger);
        vec::axpy(r, -alpha, q, ledger);
        ++rep.iterations;
        rnorm = vec::norm2(r, ledger);
        rep.residual_history.push_back(rnorm);
        if (rnorm <= tol) return finish(SolveStatus::converged);

        pc.apply(r, z, ledger);
        const double rz_next = vec::dot(r, z, ledger);
        if (!(rz_next > 0)) throw NumericalError("cg_solve: preconditioner is not positive definite (r^T z <= 0)");
        vec::aypx(p, rz_next / rz, z, ledger);
        rz = rz_next;
    }
    return finish(SolveStatus::max_iterations);
}

}  // namespace nnd
