#include "nnd/precond.hpp"

#include <cmath>
#include <string>

#include "nnd/error.hpp"

namespace nnd {

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const {
    vec::copy(r, z, ledger);
}

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("jacobi: matrix must be square");
    inv_diag_ = a.diagonal_values();
    for (std::size_t i = 0; i < inv_diag_.size(); ++i) {
        if (inv_diag_[i] == 0.0 || !std::isfinite(inv_diag_[i]))
            throw FactorizationError(i, "zero diagonal entry in Jacobi preconditioner");
        inv_diag_[i] = 1.0 / inv_diag_[i];
    }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const {
    vec::pointwise_mult(z, inv_diag_, r, ledger);
}

Ilu0Preconditioner::Ilu0Preconditioner(const CsrMatrix& a, OpLedger* setup_ledger) : lu_(a) {
    if (a.rows() != a.cols()) throw DimensionError("ilu0: matrix must be square");
    const std::size_t n = a.rows();
    const auto& off = lu_.row_offsets();
    const auto& col = lu_.col_indices();
    auto& val = lu_.values();

    diag_pos_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i)
        for (Index k = off[i]; k < off[i + 1]; ++k)
            if (static_cast<std::size_t>(col[k]) == i) diag_pos_[i] = k;
    for (std::size_t i = 0; i < n; ++i)
        if (diag_pos_[i] < 0) throw FactorizationError(i, "ILU(0): diagonal entry missing from pattern");

    // IKJ variant restricted to the existing pattern.
    std::uint64_t flops = 0;
    std::vector<Index> where(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        for (Index k = off[i]; k < off[i + 1]; ++k) where[col[k]] = k;
        for (Index k = off[i]; k < diag_pos_[i]; ++k) {
            const auto kr = static_cast<std::size_t>(col[k]);
            const double pivot = val[diag_pos_[kr]];
            if (pivot == 0.0 || !std::isfinite(pivot)) throw FactorizationError(kr, "ILU(0): zero pivot");
            val[k] /= pivot;
            ++flops;
            for (Index j = diag_pos_[kr] + 1; j < off[kr + 1]; ++j) {
                const Index w = where[col[j]];
                if (w < 0) continue;
                val[w] -= val[k] * val[j];
                flops += 2;
            }
        }
        for (Index k = off[i]; k < off[i + 1]; ++k) where[col[k]] = -1;
        const double d = val[diag_pos_[i]];
        if (d == 0.0 || !std::isfinite(d)) throw FactorizationError(i, "ILU(0): zero pivot");
    }
    if (setup_ledger) setup_ledger->record("MatLUFactorNum", flops, spmv_bytes(n, lu_.nnz()));
}

void Ilu0Preconditioner::apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const {
    const std::size_t n = lu_.rows();
    if (r.size() != n || z.size() != n) throw DimensionError("ilu0 apply: dimension mismatch");
    const auto& off = lu_.row_offsets();
    const auto& col = lu_.col_indices();
    const auto& val = lu_.values();
    for (std::size_t i = 0; i < n; ++i) {
        double s = r[i];
        for (Index k = off[i]; k < diag_pos_[i]; ++k) s -= val[k] * z[col[k]];
        z[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (Index k = diag_pos_[i] + 1; k < off[i + 1]; ++k) s -= val[k] * z[col[k]];
        z[i] = s / val[diag_pos_[i]];
    }
    const std::uint64_t nz = lu_.nnz();
    ledger.record("MatSolve", 2 * nz - n, spmv_bytes(n, lu_.nnz()));
}

std::string_view to_string(PreconditionerKind kind) {
    switch (kind) {
        case PreconditionerKind::none: return "none";
        case PreconditionerKind::jacobi: return "jacobi";
        case PreconditionerKind::ilu0: return "ilu0";
    }
    return "?";
}

PreconditionerKind preconditioner_from_string(std::string_view name) {
    if (name == "none") return PreconditionerKind::none;
    if (name == "jacobi") return PreconditionerKind::jacobi;
    if (name == "ilu0" || name == "bjacobi") return PreconditionerKind::ilu0;
    throw InvalidArgument("unknown preconditioner '" + std::string(name) + "' (none, jacobi, ilu0)");
}

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& a,
                                                    OpLedger* setup_ledger) {
    switch (kind) {
        case PreconditionerKind::none: return std::make_unique<IdentityPreconditioner>();
        case PreconditionerKind::jacobi: return std::make_unique<JacobiPreconditioner>(a);
        case PreconditionerKind::ilu0: return std::make_unique<Ilu0Preconditioner>(a, setup_ledger);
    }
    throw InvalidArgument("unknown preconditioner kind");
}

}  // namespace nnd
