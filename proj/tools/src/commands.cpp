#include "nnd_app/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "nnd/error.hpp"
#include "nnd/log.hpp"
#include "nnd/matrix_market.hpp"
#include "nnd/mesh_io.hpp"

namespace nnd::app {

namespace {

using json = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

json dmp_json(const DmpReport& d) {
    json j;
    j["min"] = d.min_value;
    j["max"] = d.max_value;
    j["n_below"] = d.n_below;
    j["n_above"] = d.n_above;
    j["n_total"] = d.n_total;
    j["percent_violated"] = d.percent_violated;
    return j;
}

std::filesystem::path timing_path(const std::filesystem::path& report) {
    auto p = report;
    p.replace_extension(".timing.json");
    return p;
}

std::filesystem::path snapshot_path(const std::filesystem::path& vtk, std::size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%05zu", step);
    auto p = vtk;
    p.replace_filename(vtk.stem().string() + buf + vtk.extension().string());
    return p;
}

json report_json(const RunConfig& cfg, const SolveOutcome& s) {
    json j;
    j["name"] = cfg.name;
    j["solver"] = cfg.solver.name;
    j["mesh"] = {{"kind", std::string(to_string(s.mesh.kind()))},
                 {"vertices", s.mesh.num_vertices()},
                 {"cells", s.mesh.num_cells()}};
    j["steady"] = !cfg.dt.has_value();
    j["dmp"] = dmp_json(s.dmp);
    auto& steps = j["steps"] = json::array();
    for (const auto& st : s.result.steps) {
        json row;
        row["step"] = st.step;
        row["time"] = st.time;
        row["iterations"] = st.iterations;
        row["inner_iterations"] = st.inner_iterations;
        row["min"] = st.dmp.min_value;
        row["max"] = st.dmp.max_value;
        row["violations"] = st.dmp.violations();
        row["flops"] = st.flops;
        row["bytes"] = st.bytes;
        steps.push_back(std::move(row));
    }
    const auto& l = s.result.solver_ledger;
    json ledger;
    ledger["flops"] = l.flops();
    ledger["bytes"] = l.bytes();
    if (l.bytes() > 0) {
        const double ai = arithmetic_intensity(l);
        ledger["ai"] = ai;
        ledger["ideal_flops_per_s"] = ideal_rate(ai, cfg.envelope);
        ledger["bound"] = ai * cfg.envelope.streams_bw < cfg.envelope.tpp ? "memory" : "compute";
    }
    auto& ks = ledger["kernels"] = json::array();
    for (const auto& [name, k] : l.kernels()) ks.push_back({{"name", name}, {"calls", k.calls}, {"flops", k.flops}, {"bytes", k.bytes}});
    j["ledger"] = std::move(ledger);
    return j;
}

}  // namespace

SolveOutcome solve_config(const RunConfig& cfg) {
    SolveOutcome out;
    out.mesh = build_mesh(cfg.mesh);
    const auto bc = build_boundary(cfg);
    const auto physics = steady_diffusion(build_diffusivity(cfg.physics, out.mesh), constant_field(cfg.physics.source));
    const auto tcfg = build_transient_config(cfg);

    std::ofstream csv;
    if (!cfg.output.csv.empty()) {
        csv = open_out(cfg.output.csv);
        csv << std::setprecision(17);
        write_step_csv_header(csv);
    }
    const bool snapshots = !cfg.output.vtk.empty() && cfg.output.cadence > 0 && tcfg.n_steps > 0;
    StepObserver observer = [&](const StepRecord& rec, std::span<const double> c) {
        if (csv.is_open()) write_step_csv_row(rec, csv);
        if (snapshots && rec.step % cfg.output.cadence == 0) {
            const std::vector<NodalField> fields{{"concentration", {c.begin(), c.end()}}};
            write_vtk(out.mesh, fields, snapshot_path(cfg.output.vtk, rec.step).string());
        }
    };

    out.result = run(out.mesh, physics, bc, tcfg, observer);
    const auto& final_level = out.result.levels.back();
    const Bounds b = cfg.bounds.value_or(Bounds{});
    out.dmp = dmp_check(final_level, b.c_min, b.c_max);
    if (out.result.solver_ledger.bytes() > 0 && out.result.solver_wall_time_s > 0)
        out.perf = efficiency(out.result.solver_ledger, out.result.solver_wall_time_s, cfg.envelope);

    if (!cfg.output.vtk.empty()) {
        const std::vector<NodalField> fields{{"concentration", final_level}};
        auto vtk = open_out(cfg.output.vtk);
        write_vtk(out.mesh, fields, vtk);
    }
    if (!cfg.output.report.empty()) {
        auto rep = open_out(cfg.output.report);
        rep << report_json(cfg, out).dump(2) << '\n';
        if (out.perf) {
            auto timing = open_out(timing_path(cfg.output.report));
            timing << to_json(*out.perf) << '\n';
        }
    }
    return out;
}

std::vector<CompareColumn> compare_solvers(const RunConfig& config, const std::vector<std::string>& solvers) {
    if (solvers.empty()) throw ConfigError("compare needs at least one solver");
    std::vector<CompareColumn> cols;
    for (const auto& name : solvers) {
        RunConfig cfg = config;
        cfg.output = {};
        apply_solver_name(cfg.solver, name);
        CompareColumn col;
        col.solver = name;
        try {
            const auto s = solve_config(cfg);
            col.dmp = s.dmp;
            for (const auto& st : s.result.steps) {
                col.iterations += st.iterations;
                col.inner_iterations += st.inner_iterations;
            }
            if (s.result.solver_ledger.bytes() > 0) col.ai = arithmetic_intensity(s.result.solver_ledger);
            if (s.perf) col.efficiency_pct = s.perf->efficiency_pct;
        } catch (const Error& e) {
            col.failed = true;
            col.error = e.what();
            spdlog::error("{}: {}", name, e.what());
        }
        cols.push_back(std::move(col));
    }
    std::optional<double> galerkin_ai, blmvm_ai;
    for (const auto& c : cols) {
        if (c.failed || !c.ai) continue;
        if (c.solver == "galerkin") galerkin_ai = c.ai;
        if (c.solver == "blmvm") blmvm_ai = c.ai;
    }
    if (galerkin_ai && blmvm_ai)
        spdlog::info("AI galerkin {:.4f} {} blmvm {:.4f}", *galerkin_ai, *galerkin_ai >= *blmvm_ai ? ">=" : "<",
                     *blmvm_ai);
    return cols;
}

void write_compare_table(const std::vector<CompareColumn>& cols, std::ostream& out) {
    auto cell = [](const CompareColumn& c, auto&& f) -> std::string { return c.failed ? "FAILED" : f(c); };
    auto num = [](double v, const char* fmt) {
        char buf[48];
        std::snprintf(buf, sizeof buf, fmt, v);
        return std::string(buf);
    };
    out << "| |";
    for (const auto& c : cols) out << ' ' << c.solver << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
    out << '\n';
    using Row = std::pair<const char*, std::function<std::string(const CompareColumn&)>>;
    const std::vector<Row> rows = {
        {"min c", [&](const CompareColumn& c) { return num(c.dmp.min_value, "%.6g"); }},
        {"max c", [&](const CompareColumn& c) { return num(c.dmp.max_value, "%.6g"); }},
        {"violations", [](const CompareColumn& c) { return format_violation_fraction(c.dmp); }},
        {"iterations", [](const CompareColumn& c) { return std::to_string(c.iterations); }},
        {"inner iterations", [](const CompareColumn& c) { return std::to_string(c.inner_iterations); }},
        {"AI", [&](const CompareColumn& c) { return c.ai ? num(*c.ai, "%.4f") : std::string("-"); }},
        {"efficiency %",
         [&](const CompareColumn& c) { return c.efficiency_pct ? num(*c.efficiency_pct, "%.2f") : std::string("-"); }},
    };
    for (const auto& [label, f] : rows) {
        out << "| " << label << " |";
        for (const auto& c : cols) out << ' ' << cell(c, f) << " |";
        out << '\n';
    }
}

QpProblem random_box_qp(std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> b(dim * dim), h(dim * dim, 0.0);
    for (auto& v : b) v = u(rng);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < dim; ++k) s += b[i * dim + k] * b[j * dim + k];
            h[i * dim + j] = s / static_cast<double>(dim) + (i == j ? 0.1 : 0.0);
        }
    // Symmetrize exactly against rounding in the product.
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < i; ++j) h[i * dim + j] = h[j * dim + i];
    std::vector<double> q(dim);
    for (auto& v : q) v = 2.0 * u(rng);
    return QpProblem::boxed(CsrMatrix::from_dense(dim, dim, h), std::move(q), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct Overrides {
    std::string solver;
    std::optional<double> rtol, inner_rtol;
    std::optional<std::size_t> threads;
    std::string vtk, report, csv;
};

void apply(RunConfig& cfg, const Overrides& o) {
    if (!o.solver.empty()) apply_solver_name(cfg.solver, o.solver);
    if (o.rtol) cfg.solver.rtol = *o.rtol;
    if (o.inner_rtol) cfg.solver.inner_rtol = *o.inner_rtol;
    if (o.threads) cfg.threads = *o.threads;
    if (!o.vtk.empty()) cfg.output.vtk = o.vtk;
    if (!o.report.empty()) cfg.output.report = o.report;
    if (!o.csv.empty()) cfg.output.csv = o.csv;
    if (!(cfg.solver.rtol > 0 && cfg.solver.rtol < 1)) throw ConfigError("--rtol must lie in (0,1)");
    if (!(cfg.solver.inner_rtol > 0 && cfg.solver.inner_rtol < 1)) throw ConfigError("--inner-rtol must lie in (0,1)");
    if (cfg.threads == 0) throw ConfigError("--threads must be at least 1");
}

std::vector<double> bound_vector(const std::string& arg, std::size_t n, double fallback) {
    if (arg.empty()) return std::vector<double>(n, fallback);
    char* end = nullptr;
    const double v = std::strtod(arg.c_str(), &end);
    if (end && *end == '\0') return std::vector<double>(n, v);
    auto vec = read_vector(arg);
    if (vec.size() != n) throw DimensionError("bound file " + arg + " has " + std::to_string(vec.size()) + " entries, expected " + std::to_string(n));
    return vec;
}

void print_solution(std::span<const double> x, std::ostream& out) {
    out << "x =";
    for (double v : x) out << ' ' << v;
    out << '\n';
}

int cmd_mesh_gen(const std::string& config, MeshSpec spec, const std::string& out_path, std::ostream& out) {
    if (!config.empty()) spec = load_config(config).mesh;
    const Mesh mesh = build_mesh(spec);
    if (!out_path.empty()) {
        const std::filesystem::path p(out_path);
        if (p.extension() == ".vtk") {
            auto f = open_out(p);
            write_vtk(mesh, {}, f);
        } else {
            auto f = open_out(p);
            write_gmsh(mesh, f);
        }
    }
    out << "kind " << to_string(mesh.kind()) << "\nvertices " << mesh.num_vertices() << "\ncells "
        << mesh.num_cells() << "\nboundary_facets " << mesh.num_facets() << "\nvolume " << std::setprecision(15)
        << total_volume(mesh) << '\n';
    return kOk;
}

int cmd_solve(const std::string& config, const Overrides& o, std::ostream& out) {
    RunConfig cfg = load_config(config);
    apply(cfg, o);
    const auto s = solve_config(cfg);
    std::size_t iters = 0, inner = 0;
    for (const auto& st : s.result.steps) {
        iters += st.iterations;
        inner += st.inner_iterations;
    }
    out << "solver " << cfg.solver.name << "\nmesh " << s.mesh.num_vertices() << " vertices, " << s.mesh.num_cells()
        << " cells\nsteps " << s.result.steps.size() << "\niterations " << iters << "\ninner_iterations " << inner
        << "\nmin " << std::setprecision(9) << s.dmp.min_value << "\nmax " << s.dmp.max_value << "\nviolated "
        << format_violation_fraction(s.dmp) << " (below " << s.dmp.n_below << ", above " << s.dmp.n_above << ")\n";
    if (s.perf) {
        out << "flops " << s.perf->flops << "\nbytes " << s.perf->bytes << "\nai " << s.perf->ai << "\nwall_time_s "
            << s.perf->wall_time_s << "\nefficiency_pct " << s.perf->efficiency_pct << " (" << to_string(s.perf->bound)
            << "-bound" << (s.perf->over_unity ? ", above roofline" : "") << ")\n";
    }
    return kOk;
}

int cmd_compare(const std::string& config, const std::vector<std::string>& solvers_flag, const Overrides& o,
                std::ostream& out) {
    RunConfig cfg = load_config(config);
    apply(cfg, o);
    const auto solvers = solvers_flag.empty() ? cfg.compare : solvers_flag;
    const auto cols = compare_solvers(cfg, solvers);
    write_compare_table(cols, out);
    if (!o.report.empty()) {
        json j = json::array();
        for (const auto& c : cols) {
            json col;
            col["solver"] = c.solver;
            col["failed"] = c.failed;
            if (c.failed) {
                col["error"] = c.error;
            } else {
                col["dmp"] = dmp_json(c.dmp);
                col["iterations"] = c.iterations;
                col["inner_iterations"] = c.inner_iterations;
                if (c.ai) col["ai"] = *c.ai;
            }
            j.push_back(std::move(col));
        }
        auto f = open_out(o.report);
        f << j.dump(2) << '\n';
    }
    for (const auto& c : cols)
        if (c.failed) return kSolverFailure;
    return kOk;
}

struct QpArgs {
    std::string matrix, q, lower, upper, solver = "tron", out;
    std::size_t random = 0;
    std::uint64_t seed = 1;
    double rtol = 1e-6;
    double inner_rtol = 1e-1;
};

int cmd_qp(const QpArgs& a, std::ostream& out) {
    QpProblem p;
    if (a.random > 0) {
        if (!a.matrix.empty()) throw ConfigError("--random and --matrix are exclusive");
        std::mt19937_64 rng(a.seed);
        p = random_box_qp(a.random, rng);
    } else {
        if (a.matrix.empty() || a.q.empty()) throw ConfigError("qp needs --matrix and --q, or --random DIM");
        p.H = read_matrix_market(a.matrix);
        p.q = read_vector(a.q);
        p.lower = bound_vector(a.lower, p.q.size(), -kInf);
        p.upper = bound_vector(a.upper, p.q.size(), kInf);
    }
    p.validate();
    const std::vector<double> start = project(std::vector<double>(p.size(), 0.0), p.lower, p.upper);
    OpLedger ledger;
    QpResult res;
    if (a.solver == "blmvm") {
        BlmvmOptions o;
        o.rtol = a.rtol;
        res = solve_blmvm(p, o, start, ledger);
    } else {
        SolverSpec spec;
        spec.inner_rtol = a.inner_rtol;
        apply_solver_name(spec, a.solver);
        if (spec.choice != SolverChoice::tron) throw ConfigError("qp --solver must be tron, tron1..3 or blmvm");
        TronOptions o;
        o.rtol = a.rtol;
        o.inner_rtol = spec.inner_rtol;
        res = solve_tron(p, o, start, ledger);
    }
    const double tol = kkt_tolerance(p, start, a.rtol);
    const auto cert = kkt_certificate(p, res.x, tol);
    out << std::setprecision(12);
    print_solution(res.x, out);
    out << "status " << to_string(res.report.status) << "\nouter_iterations " << res.report.outer_iterations
        << "\ninner_iterations " << res.report.inner_iterations << "\nobjective " << res.report.objective
        << "\nprojected_gradient_norm " << res.report.projected_gradient_norm << "\nkkt "
        << (cert.passed ? "PASS" : "FAIL") << " max_violation " << cert.max_violation << " tolerance " << cert.tolerance
        << " feasible " << (cert.feasible ? "yes" : "no") << '\n';
    if (a.random > 0 && a.random <= 20) {
        const auto bf = brute_force_qp(p);
        double diff = 0;
        for (std::size_t i = 0; i < p.size(); ++i) diff = std::max(diff, std::abs(bf.x[i] - res.x[i]));
        out << "brute_force_max_diff " << diff << '\n';
    }
    if (!a.out.empty()) write_vector(res.x, a.out);
    return cert.passed ? kOk : kSolverFailure;
}

int cmd_perf_report(const std::string& timing, const std::string& config, std::optional<double> tpp,
                    std::optional<double> bw, const std::string& csv, std::ostream& out) {
    PerfEnvelope env = PerfEnvelope::mustang_single_core();
    if (!config.empty()) env = load_config(config).envelope;
    if (tpp) env.tpp = *tpp;
    if (bw) env.streams_bw = *bw;
    std::ifstream in(timing);
    if (!in) throw ConfigError("cannot open " + timing);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto snap = ledger_from_json(ss.str());
    const auto report = efficiency(snap.ledger, snap.wall_time_s, env);
    out << to_json(report) << '\n';
    if (!csv.empty()) {
        auto f = open_out(csv);
        write_csv(report, f);
    }
    return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        init_logging_from_env();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    CLI::App app{"Anisotropic diffusion with Galerkin and bound-constrained QP solvers"};
    app.require_subcommand(1);

    std::string config;
    Overrides o;
    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Run configuration (TOML subset)")->required();
        sub->add_option("--solver", o.solver, "galerkin, tron, tron1, tron2, tron3 or blmvm");
        sub->add_option("--rtol", o.rtol, "Relative tolerance");
        sub->add_option("--inner-rtol", o.inner_rtol, "TRON inner CG tolerance");
        sub->add_option("--threads", o.threads, "Assembly threads");
        sub->add_option("--vtk", o.vtk, "VTK output path");
        sub->add_option("--report", o.report, "JSON report path");
        sub->add_option("--csv", o.csv, "Per-step CSV path");
    };

    auto* mesh_gen = app.add_subcommand("mesh-gen", "Generate a mesh and write it as .msh or .vtk");
    MeshSpec spec;
    std::string kind = "tet4", mesh_out;
    int n = 0;
    mesh_gen->add_option("--config", config, "Take the [mesh] section of this config");
    mesh_gen->add_option("--generator", spec.generator, "box or cube_with_hole");
    mesh_gen->add_option("--n", n, "Divisions per axis");
    mesh_gen->add_option("--nx", spec.nx);
    mesh_gen->add_option("--ny", spec.ny);
    mesh_gen->add_option("--nz", spec.nz);
    mesh_gen->add_option("--kind", kind, "tet4 or hex8");
    mesh_gen->add_option("--refine", spec.refine, "Uniform refinements");
    mesh_gen->add_option("--out", mesh_out, "Output path");

    auto* solve = app.add_subcommand("solve", "Run one steady or transient solve");
    add_overrides(solve);

    auto* compare = app.add_subcommand("compare", "Run several solvers on one configuration");
    std::vector<std::string> solvers;
    add_overrides(compare);
    compare->add_option("--solvers", solvers, "Solver list, overrides [compare] solvers")->delimiter(',');

    auto* qp = app.add_subcommand("qp", "Solve a standalone bound-constrained QP");
    QpArgs qa;
    qp->add_option("--matrix", qa.matrix, "MatrixMarket Hessian");
    qp->add_option("--q", qa.q, "Linear term, whitespace-separated");
    qp->add_option("--lower", qa.lower, "Lower bound: number or vector file");
    qp->add_option("--upper", qa.upper, "Upper bound: number or vector file");
    qp->add_option("--random", qa.random, "Random SPD instance of this dimension with bounds [0,1]");
    qp->add_option("--seed", qa.seed, "Seed for --random");
    qp->add_option("--solver", qa.solver, "tron, tron1, tron2, tron3 or blmvm");
    qp->add_option("--rtol", qa.rtol, "Relative projected-gradient tolerance");
    qp->add_option("--inner-rtol", qa.inner_rtol, "TRON inner CG tolerance");
    qp->add_option("--out", qa.out, "Write the solution vector here");

    auto* perf = app.add_subcommand("perf-report", "Recompute efficiency of a timing report for an envelope");
    std::string timing, perf_csv;
    std::optional<double> tpp, bw;
    perf->add_option("--report", timing, "Timing JSON written by solve")->required();
    perf->add_option("--config", config, "Take the [perf] section of this config");
    perf->add_option("--tpp", tpp, "Peak FLOPS/s");
    perf->add_option("--bw", bw, "Streaming bandwidth, bytes/s");
    perf->add_option("--csv", perf_csv, "Per-kernel CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (mesh_gen->parsed()) {
            if (n > 0) {
                spec.n = n;
                spec.nx = spec.ny = spec.nz = n;
            }
            spec.kind = element_kind_from_string(kind);
            return cmd_mesh_gen(config, spec, mesh_out, out);
        }
        if (solve->parsed()) return cmd_solve(config, o, out);
        if (compare->parsed()) return cmd_compare(config, solvers, o, out);
        if (qp->parsed()) return cmd_qp(qa, out);
        if (perf->parsed()) return cmd_perf_report(timing, config, tpp, bw, perf_csv, out);
    } catch (const SolverFailure& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kConfigError;
}

}  // namespace nnd::app
