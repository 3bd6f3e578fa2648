#include <doctest.h>

#include <sstream>

#include "nnd/error.hpp"
#include "nnd/transient.hpp"
#include "support/dense.hpp"

using namespace nnd;
using nnd::testing::max_abs_diff;
using nnd::testing::to_eigen;

namespace {

PointwisePhysics anisotropic_physics(double source = 0.0) {
    DispersionParams p;
    p.alpha_L = 1.0;
    p.alpha_T = 0.001;
    return steady_diffusion(DiffusivityField::uniform_dispersion({1, 1, 1}, p), constant_field(source));
}

BoundarySpec hole_bc() {
    BoundarySpec bc;
    bc.dirichlet[kOuterMarker] = constant_field(0.0);
    bc.dirichlet[kHoleMarker] = constant_field(1.0);
    return bc;
}

BoundarySpec box_bc(double value) {
    BoundarySpec bc;
    bc.dirichlet[kOuterMarker] = constant_field(value);
    return bc;
}

// Backward Euler on the dense full system, Dirichlet rows eliminated.
std::vector<std::vector<double>> dense_backward_euler(const Mesh& mesh, const PointwisePhysics& physics,
                                                      const BoundarySpec& bc, double dt, std::size_t steps,
                                                      double initial) {
    const auto k = to_eigen(assemble_jacobian(mesh, physics, {}, {}, 0, 0));
    const auto m = to_eigen(assemble_mass(mesh));
    const auto f = to_eigen(assemble(mesh, physics, bc).f);
    const auto dirichlet = collect_dirichlet(mesh, bc, 0);
    const std::size_t n = mesh.num_vertices();
    std::vector<bool> fixed(n, false);
    Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), initial);
    for (const auto& d : dirichlet) {
        fixed[d.dof] = true;
        c(d.dof) = d.value;
    }
    std::vector<Eigen::Index> free;
    for (std::size_t i = 0; i < n; ++i)
        if (!fixed[i]) free.push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd a = m / dt + k;
    Eigen::MatrixXd aff(free.size(), free.size());
    for (std::size_t i = 0; i < free.size(); ++i)
        for (std::size_t j = 0; j < free.size(); ++j) aff(i, j) = a(free[i], free[j]);
    const Eigen::LDLT<Eigen::MatrixXd> solver(aff);
    std::vector<std::vector<double>> levels{nnd::testing::to_std(c)};
    for (std::size_t s = 0; s < steps; ++s) {
        Eigen::VectorXd fixed_part = c;
        for (auto i : free) fixed_part(i) = 0;
        const Eigen::VectorXd rhs = f + m * c / dt - a * fixed_part;
        Eigen::VectorXd bf(free.size());
        for (std::size_t i = 0; i < free.size(); ++i) bf(i) = rhs(free[i]);
        const Eigen::VectorXd x = solver.solve(bf);
        for (std::size_t i = 0; i < free.size(); ++i) c(free[i]) = x(i);
        levels.push_back(nnd::testing::to_std(c));
    }
    return levels;
}

}  // namespace

TEST_CASE("transient operator examples") {
    const auto m = CsrMatrix::identity(3);
    const auto zero = CsrMatrix::from_triplets(3, 3, {});
    const auto op = build_transient_operator(zero, m, 0.5);
    CHECK(to_eigen(op).isApprox(2.0 * Eigen::MatrixXd::Identity(3, 3)));

    const auto rhs = build_transient_rhs(std::vector<double>(3, 0.0), m, std::vector<double>{1, 2, 3}, 0.5);
    CHECK(rhs == std::vector<double>{2, 4, 6});

    CHECK_THROWS_AS(build_transient_operator(zero, m, 0.0), ConfigError);
    CHECK_THROWS_AS(build_transient_operator(zero, m, -1.0), ConfigError);
    CHECK_THROWS_AS(build_transient_rhs(std::vector<double>(3), m, std::vector<double>(3), 0.0), ConfigError);
}

TEST_CASE("transient operator tends to K for large dt and unions patterns") {
    const auto mesh = generate_box(2, 2, 2, ElementKind::tet4);
    const auto physics = anisotropic_physics();
    const auto k = assemble_jacobian(mesh, physics, {}, {}, 0, 0);
    const auto m = assemble_mass(mesh);
    const auto op = build_transient_operator(k, m, 1e12);
    const double scale = to_eigen(k).cwiseAbs().maxCoeff();
    CHECK((to_eigen(op) - to_eigen(k)).cwiseAbs().maxCoeff() <= 1e-10 * scale);

    const auto k_diag = CsrMatrix::diagonal(std::vector<double>{1, 1});
    const auto m_off = CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    const auto u = build_transient_operator(k_diag, m_off, 1.0);
    CHECK(u.nnz() == 4);
}

TEST_CASE("config validation") {
    TransientConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_steps = 3;
    c.dt = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dt = 1;
    c.bounds = Bounds{1, 0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(solver_choice_from_string("tron") == SolverChoice::tron);
    CHECK(to_string(SolverChoice::blmvm) == "blmvm");
    CHECK_THROWS_AS(solver_choice_from_string("newton"), ConfigError);
}

TEST_CASE("zero data stays zero") {
    const auto mesh = generate_box(2, 2, 2, ElementKind::tet4);
    TransientConfig cfg;
    cfg.n_steps = 3;
    cfg.dt = 0.1;
    cfg.initial_value = 0.0;
    for (auto solver : {SolverChoice::galerkin, SolverChoice::tron, SolverChoice::blmvm}) {
        cfg.solver = solver;
        const auto r = run(mesh, anisotropic_physics(), box_bc(0.0), cfg);
        REQUIRE(r.levels.size() == 4);
        for (const auto& level : r.levels)
            for (double v : level) CHECK(v == 0.0);
    }
}

TEST_CASE("steady run records one step") {
    const auto mesh = generate_box(3, 3, 3, ElementKind::tet4);
    TransientConfig cfg;
    const auto r = run(mesh, anisotropic_physics(1.0), box_bc(0.0), cfg);
    CHECK(r.levels.size() == 2);
    CHECK(r.steps.size() == 1);
    CHECK(r.steps[0].iterations > 0);
    CHECK(r.solver_ledger.flops() == r.steps[0].flops);
    CHECK(r.steps[0].dmp.min_value >= 0.0);
}

TEST_CASE("backward Euler matches the dense recurrence") {
    const auto mesh = generate_box(4, 4, 4, ElementKind::tet4);
    REQUIRE(mesh.num_vertices() <= 300);
    const auto physics = anisotropic_physics(0.5);
    auto bc = box_bc(0.25);
    TransientConfig cfg;
    cfg.n_steps = 5;
    cfg.dt = 0.01;
    cfg.rtol = 1e-13;
    cfg.initial_value = 0.75;
    const auto r = run(mesh, physics, bc, cfg);
    const auto ref = dense_backward_euler(mesh, physics, bc, cfg.dt, cfg.n_steps, cfg.initial_value);
    REQUIRE(r.levels.size() == ref.size());
    for (std::size_t s = 0; s < ref.size(); ++s) CHECK(max_abs_diff(r.levels[s], ref[s]) <= 1e-10);
}

TEST_CASE("QP paths with inactive bounds agree with Galerkin") {
    const auto mesh = generate_box(3, 3, 3, ElementKind::hex8);
    const auto physics = steady_diffusion(DiffusivityField::constant(identity3()), constant_field(1.0));
    TransientConfig cfg;
    cfg.n_steps = 3;
    cfg.dt = 0.05;
    cfg.rtol = 1e-10;
    cfg.initial_value = 0.1;
    const auto g = run(mesh, physics, box_bc(0.1), cfg);
    cfg.bounds = Bounds{-1e3, 1e3};
    for (auto solver : {SolverChoice::tron, SolverChoice::blmvm}) {
        cfg.solver = solver;
        const auto q = run(mesh, physics, box_bc(0.1), cfg);
        for (std::size_t s = 0; s < g.levels.size(); ++s) CHECK(max_abs_diff(q.levels[s], g.levels[s]) <= 1e-7);
    }
}

TEST_CASE("QP paths keep every level in bounds while Galerkin does not") {
    const auto mesh = generate_cube_with_hole(9, ElementKind::tet4);
    TransientConfig cfg;
    cfg.n_steps = 4;
    cfg.dt = 0.05;
    cfg.bounds = Bounds{0, 1};
    const auto g = run(mesh, anisotropic_physics(), hole_bc(), cfg);
    std::size_t galerkin_violations = 0;
    for (const auto& s : g.steps) galerkin_violations += s.dmp.violations();
    CHECK(galerkin_violations > 0);

    for (auto solver : {SolverChoice::tron, SolverChoice::blmvm}) {
        cfg.solver = solver;
        std::size_t observed = 0;
        const auto r = run(mesh, anisotropic_physics(), hole_bc(), cfg,
                           [&](const StepRecord& rec, std::span<const double> c) {
                               ++observed;
                               CHECK(rec.dmp.violations() == 0);
                               for (double v : c) {
                                   CHECK(v >= 0.0);
                                   CHECK(v <= 1.0);
                               }
                           });
        CHECK(observed == cfg.n_steps);
        CHECK(r.levels.size() == cfg.n_steps + 1);
    }
}

TEST_CASE("warm start does not cost more iterations than a cold start") {
    const auto mesh = generate_cube_with_hole(9, ElementKind::tet4);
    TransientConfig cfg;
    cfg.n_steps = 5;
    cfg.dt = 0.02;
    cfg.bounds = Bounds{0, 1};
    cfg.solver = SolverChoice::tron;
    auto total = [](const RunResult& r) {
        std::size_t it = 0;
        for (const auto& s : r.steps) it += s.iterations;
        return it;
    };
    const auto warm = run(mesh, anisotropic_physics(), hole_bc(), cfg);
    cfg.warm_start = false;
    const auto cold = run(mesh, anisotropic_physics(), hole_bc(), cfg);
    MESSAGE("warm " << total(warm) << " cold " << total(cold));
    CHECK(total(warm) <= total(cold));
}

TEST_CASE("Dirichlet values outside the bounds are rejected on QP paths") {
    const auto mesh = generate_box(2, 2, 2, ElementKind::tet4);
    TransientConfig cfg;
    cfg.bounds = Bounds{0, 1};
    cfg.solver = SolverChoice::tron;
    CHECK_THROWS_AS(run(mesh, anisotropic_physics(), box_bc(2.0), cfg), ConfigError);
    cfg.solver = SolverChoice::galerkin;
    CHECK_NOTHROW(run(mesh, anisotropic_physics(), box_bc(2.0), cfg));
}

TEST_CASE("non-convergence names the step") {
    const auto mesh = generate_cube_with_hole(9, ElementKind::tet4);
    TransientConfig cfg;
    cfg.n_steps = 2;
    cfg.dt = 0.05;
    cfg.max_iterations = 1;
    cfg.rtol = 1e-12;
    try {
        run(mesh, anisotropic_physics(), hole_bc(), cfg);
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.step() == 1);
    }
}

TEST_CASE("step CSV") {
    std::ostringstream out;
    write_step_csv_header(out);
    StepRecord s;
    s.step = 2;
    s.iterations = 7;
    s.dmp = dmp_check(std::vector<double>{-0.5, 0.5}, 0, 1);
    write_step_csv_row(s, out);
    const auto text = out.str();
    CHECK(text.rfind("step,time,iterations", 0) == 0);
    CHECK(text.find("\n2,0,7,0,-0.5,0.5,1,") != std::string::npos);
}
