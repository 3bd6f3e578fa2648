#include "nnd/transient.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>

#include "detail/log.hpp"
#include "nnd/cg.hpp"
#include "nnd/error.hpp"

namespace nnd {

CsrMatrix build_transient_operator(const CsrMatrix& k, const CsrMatrix& m, double dt) {
    if (!(dt > 0)) throw ConfigError("time step must be positive, got " + std::to_string(dt));
    if (k.rows() != m.rows() || k.cols() != m.cols()) throw DimensionError("stiffness and mass differ in shape");
    return add(1.0 / dt, m, 1.0, k);
}

std::vector<double> build_transient_rhs(std::span<const double> f_next, const CsrMatrix& m,
                                        std::span<const double> c_n, double dt) {
    if (!(dt > 0)) throw ConfigError("time step must be positive, got " + std::to_string(dt));
    if (f_next.size() != m.rows() || c_n.size() != m.cols()) throw DimensionError("transient rhs: size mismatch");
    std::vector<double> out(f_next.size());
    multiply(m, c_n, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f_next[i] + out[i] / dt;
    return out;
}

std::string_view to_string(SolverChoice choice) {
    switch (choice) {
        case SolverChoice::galerkin: return "galerkin";
        case SolverChoice::tron: return "tron";
        case SolverChoice::blmvm: return "blmvm";
    }
    return "?";
}

SolverChoice solver_choice_from_string(std::string_view name) {
    if (name == "galerkin") return SolverChoice::galerkin;
    if (name == "tron") return SolverChoice::tron;
    if (name == "blmvm") return SolverChoice::blmvm;
    throw ConfigError("unknown solver '" + std::string(name) + "'");
}

void TransientConfig::validate() const {
    if (n_steps > 0 && !(dt > 0)) throw ConfigError("time step must be positive, got " + std::to_string(dt));
    if (!(rtol > 0 && rtol < 1)) throw ConfigError("rtol must lie in (0,1)");
    if (!(inner_rtol > 0 && inner_rtol < 1)) throw ConfigError("inner_rtol must lie in (0,1)");
    if (!std::isfinite(initial_value)) throw ConfigError("initial value must be finite");
    if (bounds) {
        if (!(bounds->c_min <= bounds->c_max)) throw ConfigError("c_min exceeds c_max");
        if (solver != SolverChoice::galerkin && (initial_value < bounds->c_min || initial_value > bounds->c_max))
            throw ConfigError("initial value lies outside [c_min, c_max]");
    }
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> load_vector(const Mesh& mesh, const PointwisePhysics& physics, const BoundarySpec& bc, double t,
                                const AssemblyOptions& opts) {
    auto f = assemble_residual(mesh, physics, {}, {}, t, 0.0, opts);
    const auto neumann = assemble_neumann(mesh, bc, t);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = -f[i] + neumann[i];
    return f;
}

void check_dirichlet_bounds(std::span<const DirichletDof> dirichlet, const Bounds& b) {
    for (const auto& d : dirichlet)
        if (d.value < b.c_min || d.value > b.c_max)
            throw ConfigError("Dirichlet value " + std::to_string(d.value) + " at vertex " + std::to_string(d.dof) +
                              " lies outside [c_min, c_max]");
}

}  // namespace

RunResult run(const Mesh& mesh, const PointwisePhysics& physics, const BoundarySpec& bc,
              const TransientConfig& config, const StepObserver& observer) {
    config.validate();
    bc.validate(mesh);
    const bool steady = config.n_steps == 0;
    const bool qp_path = config.solver != SolverChoice::galerkin;
    const std::size_t n = mesh.num_vertices();
    const auto& opts = config.assembly;

    const CsrMatrix k = assemble_jacobian(mesh, physics, {}, {}, 0.0, 0.0, opts);
    CsrMatrix m;
    CsrMatrix op;
    if (steady) {
        op = k;
    } else {
        m = assemble_mass(mesh, opts);
        op = build_transient_operator(k, m, config.dt);
    }

    RunResult result;
    std::vector<double> c(n, config.initial_value);
    for (const auto& d : collect_dirichlet(mesh, bc, 0.0)) c[d.dof] = d.value;
    result.levels.push_back(c);

    std::unique_ptr<Preconditioner> galerkin_pc;
    CsrMatrix h;
    std::vector<Index> free_cached;
    const std::size_t n_solves = steady ? 1 : config.n_steps;

    for (std::size_t step = 1; step <= n_solves; ++step) {
        const double t = steady ? 0.0 : static_cast<double>(step) * config.dt;
        const auto dirichlet = collect_dirichlet(mesh, bc, t);
        if (qp_path && config.bounds) check_dirichlet_bounds(dirichlet, *config.bounds);
        const auto f = load_vector(mesh, physics, bc, t, opts);
        const auto rhs = steady ? f : build_transient_rhs(f, m, c, config.dt);

        const DofMap dofs(n, dirichlet);
        if (step == 1 || dofs.free_dofs() != free_cached) {
            h = op.submatrix(dofs.free_dofs(), dofs.free_dofs());
            free_cached = dofs.free_dofs();
            galerkin_pc.reset();
        }
        std::vector<double> ag(n);
        multiply(op, dofs.prescribed(), ag);
        std::vector<double> b(dofs.num_free());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = rhs[free_cached[i]] - ag[free_cached[i]];

        std::vector<double> x0 = config.warm_start ? dofs.restrict_to_free(c)
                                                   : std::vector<double>(dofs.num_free(), config.initial_value);
        StepRecord rec;
        rec.step = step;
        rec.time = t;
        std::vector<double> x;
        OpLedger step_ledger;
        const auto t0 = Clock::now();
        if (!qp_path) {
            if (!galerkin_pc) galerkin_pc = make_preconditioner(config.preconditioner, h, nullptr);
            CgOptions cg;
            cg.rtol = config.rtol;
            if (config.max_iterations) cg.max_iterations = config.max_iterations;
            CgResult res;
            try {
                res = cg_solve(h, b, *galerkin_pc, cg, x0, step_ledger);
            } catch (const NumericalError& e) {
                throw SolverFailure(step, std::string("CG breakdown: ") + e.what());
            }
            if (res.report.status != SolveStatus::converged)
                throw SolverFailure(step, "CG " + std::string(to_string(res.report.status)) + " after " +
                                              std::to_string(res.report.iterations) + " iterations");
            rec.iterations = res.report.iterations;
            x = std::move(res.x);
        } else {
            std::vector<double> lo(b.size(), -kInf), hi(b.size(), kInf);
            if (config.bounds) {
                lo.assign(b.size(), config.bounds->c_min);
                hi.assign(b.size(), config.bounds->c_max);
            }
            std::vector<double> q(b.size());
            for (std::size_t i = 0; i < b.size(); ++i) q[i] = -b[i];
            const QpProblem problem{h, std::move(q), std::move(lo), std::move(hi)};
            QpResult res;
            if (config.solver == SolverChoice::tron) {
                TronOptions o;
                o.rtol = config.rtol;
                o.inner_rtol = config.inner_rtol;
                o.preconditioner = config.preconditioner;
                if (config.max_iterations) o.max_iterations = config.max_iterations;
                res = solve_tron(problem, o, x0, step_ledger);
            } else {
                BlmvmOptions o;
                o.rtol = config.rtol;
                if (config.max_iterations) o.max_iterations = config.max_iterations;
                res = solve_blmvm(problem, o, x0, step_ledger);
            }
            if (res.report.status != QpStatus::converged)
                throw SolverFailure(step, std::string(to_string(config.solver)) + " " +
                                              std::string(to_string(res.report.status)) + " after " +
                                              std::to_string(res.report.outer_iterations) + " iterations");
            rec.iterations = res.report.outer_iterations;
            rec.inner_iterations = res.report.inner_iterations;
            x = std::move(res.x);
        }
        rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();

        c = dofs.expand(x);
        const Bounds report_bounds = config.bounds.value_or(Bounds{});
        rec.dmp = dmp_check(c, report_bounds.c_min, report_bounds.c_max);
        rec.flops = step_ledger.flops();
        rec.bytes = step_ledger.bytes();
        result.solver_ledger.merge(step_ledger);
        result.solver_wall_time_s += rec.wall_time_s;
        log::info("step {} t={} iterations={} min={} max={} violations={}", step, t, rec.iterations,
                  rec.dmp.min_value, rec.dmp.max_value, rec.dmp.violations());
        result.levels.push_back(c);
        result.steps.push_back(rec);
        if (observer) observer(rec, c);
    }
    return result;
}

void write_step_csv_header(std::ostream& out) {
    out << "step,time,iterations,inner_iterations,min,max,violations,flops,bytes,wall_time_s\n";
}

void write_step_csv_row(const StepRecord& s, std::ostream& out) {
    out << s.step << ',' << s.time << ',' << s.iterations << ',' << s.inner_iterations << ',' << s.dmp.min_value
        << ',' << s.dmp.max_value << ',' << s.dmp.violations() << ',' << s.flops << ',' << s.bytes << ','
        << s.wall_time_s << '\n';
}

}  // namespace nnd
