#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "nnd/sparse.hpp"

namespace nnd {

class Preconditioner {
public:
    virtual ~Preconditioner() = default;

    /// z <- M^{-1} r
    virtual void apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const = 0;
    virtual std::string_view name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const override;
    std::string_view name() const override { return "none"; }
};

/// z = diag(A)^{-1} r, logged as a pointwise multiply.
class JacobiPreconditioner final : public Preconditioner {
public:
    /// Throws FactorizationError naming the first zero diagonal row.
    explicit JacobiPreconditioner(const CsrMatrix& a);

    void apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const override;
    std::string_view name() const override { return "jacobi"; }

    const std::vector<double>& inverse_diagonal() const noexcept { return inv_diag_; }

private:
    std::vector<double> inv_diag_;
};

/// Incomplete LU with zero fill: L (unit lower) and U share A's sparsity
/// pattern. A single-process block Jacobi/ILU(0) reduces to this.
class Ilu0Preconditioner final : public Preconditioner {
public:
    /// Throws FactorizationError naming the row of a missing or zero pivot.
    explicit Ilu0Preconditioner(const CsrMatrix& a, OpLedger* setup_ledger = nullptr);

    /// Forward then backward triangular solve; logged with the SpMV byte model.
    void apply(std::span<const double> r, std::span<double> z, OpLedger& ledger) const override;
    std::string_view name() const override { return "ilu0"; }

    const CsrMatrix& factors() const noexcept { return lu_; }

private:
    CsrMatrix lu_;
    std::vector<Index> diag_pos_;
};

enum class PreconditionerKind { none, jacobi, ilu0 };

std::string_view to_string(PreconditionerKind kind);
PreconditionerKind preconditioner_from_string(std::string_view name);

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& a,
                                                    OpLedger* setup_ledger = nullptr);

}  // namespace nnd
