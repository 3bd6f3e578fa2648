#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "nnd/precond.hpp"
#include "nnd/sparse.hpp"

namespace nnd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize 1/2 c^T H c + c^T q  subject to  lower <= c <= upper.
struct QpProblem {
    CsrMatrix H;
    std::vector<double> q;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const noexcept { return q.size(); }

    /// Throws DimensionError / InvalidArgument on inconsistent data.
    void validate() const;

    static QpProblem unconstrained(CsrMatrix h, std::vector<double> q);
    static QpProblem boxed(CsrMatrix h, std::vector<double> q, double lower, double upper);

    /// Time-level form: H = J, q = r_n - J c_n, so that the gradient is
    /// J (c - c_n) + r_n.
    static QpProblem from_linearization(CsrMatrix j, std::span<const double> residual,
                                        std::span<const double> c_n, std::vector<double> lower,
                                        std::vector<double> upper);
};

double objective(const QpProblem& p, std::span<const double> c, OpLedger& ledger);
std::vector<double> gradient(const QpProblem& p, std::span<const double> c, OpLedger& ledger);

std::vector<double> project(std::span<const double> c, std::span<const double> lower,
                            std::span<const double> upper);

/// Zeroes g_i where c_i sits on a bound and -g_i points outside the box.
/// A zero component on a bound is treated as free.
std::vector<double> projected_gradient(std::span<const double> g, std::span<const double> c,
                                       std::span<const double> lower, std::span<const double> upper);

enum class QpStatus { converged, max_iterations, numerical_breakdown };

std::string_view to_string(QpStatus status);

struct QpReport {
    QpStatus status = QpStatus::converged;
    std::size_t outer_iterations = 0;
    std::size_t inner_iterations = 0;  ///< total inner CG iterations (TRON)
    double initial_projected_gradient_norm = 0;
    double projected_gradient_norm = 0;
    double objective = 0;
    OpLedger ledger;
    double wall_time_s = 0;
};

struct QpResult {
    std::vector<double> x;
    QpReport report;
};

/// Called after every accepted outer iteration.
using QpObserver = std::function<void(std::size_t iteration, std::span<const double> x, double objective)>;

struct BlmvmOptions {
    double rtol = 1e-6;
    std::size_t max_iterations = 50000;
    std::size_t memory = 5;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    double abs_floor = 1e-50;
    QpObserver observer;
};

struct TronOptions {
    double rtol = 1e-6;
    double inner_rtol = 1e-1;
    std::size_t max_iterations = 1000;
    /// Zero means the number of free variables plus ten.
    std::size_t max_inner_iterations = 0;
    PreconditionerKind preconditioner = PreconditionerKind::jacobi;
    std::size_t gradient_projection_steps = 3;
    double eta_accept = 1e-4;
    double eta_shrink = 0.25;
    double eta_expand = 0.75;
    double shrink = 0.25;
    double expand = 2.0;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    double abs_floor = 1e-50;
    QpObserver observer;
};

/// Bounded limited-memory variable metric: L-BFGS two-loop recursion on
/// (step, projected-gradient change) pairs, projected Armijo backtracking.
/// Converged when ||P g|| <= rtol ||P g(x0)||.
QpResult solve_blmvm(const QpProblem& p, const BlmvmOptions& options, std::span<const double> x0, OpLedger& ledger);

/// Active-set Newton trust-region method: projected-gradient steps to settle
/// the active set, then truncated preconditioned CG on the free variables and
/// a projected line search with ratio-tested radius updates.
QpResult solve_tron(const QpProblem& p, const TronOptions& options, std::span<const double> x0, OpLedger& ledger);

struct KktCertificate {
    bool passed = false;
    double max_violation = 0;
    double tolerance = 0;
    std::size_t worst_index = 0;
    bool feasible = false;
};

/// Checks |g_i| <= tol at interior components, g_i >= -tol at lower-active
/// and g_i <= tol at upper-active components, and exact feasibility.
KktCertificate kkt_certificate(const QpProblem& p, std::span<const double> c, double tol_abs);

/// rtol * ||g(x0)|| + 1e-12.
double kkt_tolerance(const QpProblem& p, std::span<const double> x0, double rtol);

struct BruteForceQpResult {
    std::vector<double> x;
    /// Gradient components at active bounds (>= 0 lower, <= 0 upper), zero
    /// on free components.
    std::vector<double> multipliers;
    std::size_t assignments_tried = 0;
};

/// Enumerates all 3^n free/lower/upper assignments and returns the KKT point.
/// Requires n <= 20 and finite bounds.
BruteForceQpResult brute_force_qp(const QpProblem& p);

}  // namespace nnd
