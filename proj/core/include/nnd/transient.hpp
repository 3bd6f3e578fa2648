#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nnd/diagnostics.hpp"
#include "nnd/fem.hpp"
#include "nnd/precond.hpp"
#include "nnd/qp.hpp"

namespace nnd {

/// M/dt + K. Throws ConfigError when dt <= 0.
CsrMatrix build_transient_operator(const CsrMatrix& k, const CsrMatrix& m, double dt);

/// f_next + M c_n / dt. Throws ConfigError when dt <= 0.
std::vector<double> build_transient_rhs(std::span<const double> f_next, const CsrMatrix& m,
                                        std::span<const double> c_n, double dt);

enum class SolverChoice { galerkin, tron, blmvm };

std::string_view to_string(SolverChoice choice);
SolverChoice solver_choice_from_string(std::string_view name);

struct Bounds {
    double c_min = 0.0;
    double c_max = 1.0;
};

struct TransientConfig {
    double dt = 1.0;
    /// Zero selects a single steady solve of K c = f.
    std::size_t n_steps = 0;
    double initial_value = 1e-8;
    /// Enforced on the QP paths; used only for reporting on the Galerkin path.
    std::optional<Bounds> bounds;
    SolverChoice solver = SolverChoice::galerkin;
    double rtol = 1e-6;
    double inner_rtol = 1e-1;
    std::size_t max_iterations = 0;  ///< zero keeps the solver default
    PreconditionerKind preconditioner = PreconditionerKind::ilu0;
    bool warm_start = true;
    AssemblyOptions assembly;

    /// Throws ConfigError on dt <= 0, inverted bounds or an initial value
    /// outside enforced bounds.
    void validate() const;
};

struct StepRecord {
    std::size_t step = 0;
    double time = 0;
    std::size_t iterations = 0;        ///< CG iterations, or QP outer iterations
    std::size_t inner_iterations = 0;  ///< TRON inner CG iterations
    DmpReport dmp;
    std::uint64_t flops = 0;
    std::uint64_t bytes = 0;
    double wall_time_s = 0;
};

struct RunResult {
    /// Nodal fields for time levels 0..n_steps; a steady run holds the
    /// initial guess and the solution.
    std::vector<std::vector<double>> levels;
    std::vector<StepRecord> steps;
    /// Solver kernels only; assembly and I/O are excluded.
    OpLedger solver_ledger;
    double solver_wall_time_s = 0;
};

/// Called after every completed step with the new nodal field.
using StepObserver = std::function<void(const StepRecord&, std::span<const double> c)>;

/// Backward-Euler driver. `physics` is the steady pointwise form (F0 = -f,
/// F1 = D grad c); its Jacobian is K and its residual at c = 0 is -f.
/// Throws SolverFailure naming the step when an inner solve does not converge.
RunResult run(const Mesh& mesh, const PointwisePhysics& physics, const BoundarySpec& bc,
              const TransientConfig& config, const StepObserver& observer = {});

void write_step_csv_header(std::ostream& out);
void write_step_csv_row(const StepRecord& step, std::ostream& out);

}  // namespace nnd
