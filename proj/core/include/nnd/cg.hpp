#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "nnd/precond.hpp"
#include "nnd/sparse.hpp"

namespace nnd {

enum class SolveStatus { converged, max_iterations, breakdown };

std::string_view to_string(SolveStatus status);

struct SolveReport {
    SolveStatus status = SolveStatus::converged;
    std::size_t iterations = 0;
    /// ||b - A x_k||_2 for k = 0..iterations.
    std::vector<double> residual_history;
    /// Counts logged during this solve only.
    OpLedger ledger;
    double wall_time_s = 0;
};

struct CgOptions {
    double rtol = 1e-6;
    std::size_t max_iterations = 10000;
};

struct CgResult {
    std::vector<double> x;
    SolveReport report;
};

/// Preconditioned conjugate gradients for SPD systems.
///
/// Stops when ||b - A x||_2 <= rtol * ||b||_2 (unpreconditioned residual).
/// A zero right-hand side returns x = 0 without iterating. Throws
/// NumericalError if p^T A p <= 0 or r^T M^{-1} r <= 0 is met.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& pc,
                  const CgOptions& options, std::span<const double> x0, OpLedger& ledger);

}  // namespace nnd
