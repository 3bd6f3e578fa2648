#include <doctest.h>

#include <random>
#include <sstream>

#include "nnd/cg.hpp"
#include "nnd/error.hpp"
#include "nnd/matrix_market.hpp"
#include "nnd/precond.hpp"
#include "nnd/sparse.hpp"
#include "support/dense.hpp"

using namespace nnd;
using nnd::testing::from_eigen;
using nnd::testing::to_eigen;

namespace {

CsrMatrix random_sparse(std::size_t n, double fill, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1), p(0, 1);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (p(rng) < fill) t.push_back({static_cast<Index>(i), static_cast<Index>(j), u(rng)});
    return CsrMatrix::from_triplets(n, n, t);
}

CsrMatrix tridiagonal(std::size_t n, double diag, double off) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Index>(i);
        t.push_back({ii, ii, diag});
        if (i + 1 < n) {
            t.push_back({ii, ii + 1, off});
            t.push_back({ii + 1, ii, off});
        }
    }
    return CsrMatrix::from_triplets(n, n, t);
}

}  // namespace

TEST_CASE("CSR construction and invariants") {
    auto a = CsrMatrix::from_triplets(3, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {2, 1, 3.0}, {0, 2, 0.5}});
    CHECK(a.nnz() == 3);
    CHECK(a.row_offsets() == std::vector<Index>{0, 2, 2, 3});
    CHECK(a.col_indices() == std::vector<Index>{0, 2, 1});
    CHECK(a.at(0, 2) == 1.5);
    CHECK(a.at(1, 1) == 0.0);
    CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 2, 1}, {0, 1}, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 2, 2}, {1, 0}, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 1, 2}, {0, 5}, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{0, 3, 1.0}}), InvalidArgument);

    auto t = a.transpose();
    CHECK(t.at(2, 0) == 1.5);
    CHECK(t.at(1, 2) == 3.0);
    CHECK(a.symmetry_defect() > 0);
    CHECK(CsrMatrix::identity(4).symmetry_defect() == 0);
}

TEST_CASE("add takes the union of patterns") {
    auto a = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 2.0}});
    auto b = CsrMatrix::from_triplets(2, 2, {{0, 1, 5.0}, {1, 1, 1.0}});
    auto c = add(2.0, a, 3.0, b);
    CHECK(c.nnz() == 3);
    CHECK(c.at(0, 0) == 2.0);
    CHECK(c.at(0, 1) == 15.0);
    CHECK(c.at(1, 1) == 7.0);
    CHECK_THROWS_AS(add(1.0, a, 1.0, CsrMatrix::identity(3)), DimensionError);
}

TEST_CASE("submatrix keeps the selected block") {
    std::mt19937_64 rng(11);
    auto a = random_sparse(12, 0.3, rng);
    const std::vector<Index> rows{1, 4, 7, 11}, cols{0, 4, 9};
    auto s = a.submatrix(rows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) CHECK(s.at(i, j) == a.at(rows[i], cols[j]));
}

TEST_CASE("vector kernel byte and flop counts") {
    OpLedger l;
    std::vector<double> x1{3.0}, y1{4.0};
    CHECK(vec::dot(x1, y1, l) == 12.0);
    CHECK(l.bytes() == 24);
    CHECK(l.flops() == 2);

    OpLedger n;
    std::vector<double> z(5, 0.0);
    CHECK(vec::norm2(z, n) == 0.0);
    CHECK(n.bytes() == 48);
    CHECK(n.flops() == 10);

    const std::size_t N = 37;
    std::vector<double> x(N, 1.5), y(N, 2.0), w(N);
    OpLedger ax;
    vec::axpy(y, 0.0, x, ax);
    CHECK(y == std::vector<double>(N, 2.0));
    CHECK(ax.bytes() == 24 * N);
    CHECK(ax.flops() == 2 * N);

    struct Case {
        const char* name;
        std::uint64_t bytes, flops;
    };
    OpLedger k;
    vec::copy(x, w, k);
    vec::set(w, 1.0, k);
    vec::scale(w, 2.0, k);
    vec::aypx(w, 0.5, x, k);
    vec::pointwise_mult(w, x, y, k);
    vec::waxpy(w, 2.0, x, y, k);
    std::vector<double> lo(N, 0.0), hi(N, 1.0);
    vec::clamp(w, lo, hi, k);
    const Case cases[] = {{"VecCopy", 16 * N, 0},        {"VecSet", 16 * N, 0},
                          {"VecScale", 16 * N, N},       {"VecAYPX", 24 * N, 2 * N},
                          {"VecPointwiseMult", 24 * N, N}, {"VecWAXPY", 24 * N, 2 * N},
                          {"VecMedian", 32 * N, 0}};
    std::uint64_t bytes = 0, flops = 0;
    for (const auto& c : cases) {
        INFO(c.name);
        REQUIRE(k.kernels().count(c.name) == 1);
        CHECK(k.kernels().at(c.name).bytes == c.bytes);
        CHECK(k.kernels().at(c.name).flops == c.flops);
        CHECK(k.kernels().at(c.name).calls == 1);
        bytes += c.bytes;
        flops += c.flops;
    }
    CHECK(k.bytes() == bytes);
    CHECK(k.flops() == flops);
    CHECK_THROWS_AS(vec::dot(x, std::vector<double>(3), k), DimensionError);
}

TEST_CASE("kernel results") {
    OpLedger l;
    std::vector<double> x{1, 2, 3}, y{4, 5, 6}, w(3);
    vec::aypx(y, 2.0, x, l);
    CHECK(y == std::vector<double>{9, 12, 15});
    vec::waxpy(w, -1.0, x, y, l);
    CHECK(w == std::vector<double>{8, 10, 12});
    vec::pointwise_mult(w, x, x, l);
    CHECK(w == std::vector<double>{1, 4, 9});
    std::vector<double> c{-1, 0.5, 2}, lo(3, 0.0), hi(3, 1.0);
    vec::clamp(c, lo, hi, l);
    CHECK(c == std::vector<double>{0, 0.5, 1});
    CHECK(vec::norm2(std::vector<double>{3, 4}, l) == 5.0);
}

TEST_CASE("spmv byte model and dense oracle") {
    CHECK(spmv_bytes(100, 500) == 8000);
    std::mt19937_64 rng(5);
    auto a = random_sparse(50, 0.1, rng);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(50), y(50);
    for (auto& v : x) v = u(rng);
    OpLedger l;
    spmv(a, x, y, l);
    const Eigen::VectorXd ref = to_eigen(a) * to_eigen(x);
    for (int i = 0; i < 50; ++i) CHECK(std::abs(y[i] - ref(i)) <= 1e-13);
    CHECK(l.flops() == 2 * a.nnz());
    CHECK(l.bytes() == spmv_bytes(50, a.nnz()));
    CHECK(l.kernels().at("MatMult").calls == 1);

    std::vector<double> id(7);
    OpLedger li;
    spmv(CsrMatrix::identity(7), std::vector<double>{1, 2, 3, 4, 5, 6, 7}, id, li);
    CHECK(id == std::vector<double>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("ledger totals, merge and since") {
    OpLedger a;
    a.record("A", 3, 10);
    a.record("B", 1, 5);
    const OpLedger snap = a;
    a.record("A", 2, 4);
    const auto d = a.since(snap);
    CHECK(d.flops() == 2);
    CHECK(d.bytes() == 4);
    CHECK(d.kernels().at("A").calls == 1);
    CHECK(d.kernels().count("B") == 0);
    OpLedger b;
    b.merge(a);
    b.merge(a);
    CHECK(b.flops() == 12);
    std::uint64_t f = 0, by = 0;
    for (const auto& [name, k] : b.kernels()) {
        f += k.flops;
        by += k.bytes;
    }
    CHECK(f == b.flops());
    CHECK(by == b.bytes());
}

TEST_CASE("preconditioners") {
    auto d = CsrMatrix::diagonal(std::vector<double>{2, 4, 8});
    std::vector<double> r{1, 1, 1}, zj(3), zi(3);
    OpLedger l;
    JacobiPreconditioner(d).apply(r, zj, l);
    Ilu0Preconditioner(d).apply(r, zi, l);
    CHECK(zj == zi);
    CHECK(zj == std::vector<double>{0.5, 0.25, 0.125});

    std::vector<double> zr(3);
    JacobiPreconditioner(CsrMatrix::identity(3)).apply(r, zr, l);
    CHECK(zr == r);

    CHECK_THROWS_AS(JacobiPreconditioner(CsrMatrix::diagonal(std::vector<double>{1, 0, 1})), FactorizationError);
    try {
        Ilu0Preconditioner(CsrMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 0, 1.0}}));
        FAIL("expected FactorizationError");
    } catch (const FactorizationError& e) {
        CHECK(e.row() == 2);
    }
}

TEST_CASE("ILU(0) of a tridiagonal SPD matrix is the exact factorization") {
    auto a = tridiagonal(10, 2.5, -1.0);
    Ilu0Preconditioner ilu(a);
    const Eigen::MatrixXd dense = to_eigen(a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(10), ax(10), z(10);
    for (auto& v : x) v = u(rng);
    multiply(a, x, ax);
    OpLedger l;
    ilu.apply(ax, z, l);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(z[i] - x[i]) <= 1e-12);
    const Eigen::VectorXd ref = lu.solve(to_eigen(ax));
    for (int i = 0; i < 10; ++i) CHECK(std::abs(z[i] - ref(i)) <= 1e-12);
    CHECK(l.kernels().at("MatSolve").bytes == spmv_bytes(10, a.nnz()));
}

TEST_CASE("CG examples") {
    OpLedger l;
    IdentityPreconditioner none;
    auto a = tridiagonal(6, 3.0, -1.0);
    auto zero = cg_solve(a, std::vector<double>(6, 0.0), none, {}, {}, l);
    CHECK(zero.report.iterations == 0);
    CHECK(zero.x == std::vector<double>(6, 0.0));

    auto id = cg_solve(CsrMatrix::identity(5), std::vector<double>{1, -2, 3, 0, 5}, none, {}, {}, l);
    CHECK(id.report.iterations == 1);
    CHECK(id.x == std::vector<double>{1, -2, 3, 0, 5});
    CHECK(id.report.status == SolveStatus::converged);
    CHECK(id.report.residual_history.size() == 2);

    CgOptions few;
    few.max_iterations = 1;
    auto cut = cg_solve(tridiagonal(30, 2.0, -1.0), std::vector<double>(30, 1.0), none, few, {}, l);
    CHECK(cut.report.status == SolveStatus::max_iterations);

    auto indefinite = CsrMatrix::diagonal(std::vector<double>{1, -1});
    CHECK_THROWS_AS(cg_solve(indefinite, std::vector<double>{0, 1}, none, {}, {}, l), NumericalError);
}

TEST_CASE("CG matches a dense direct solve") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd b(30, 30);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) b(i, j) = u(rng);
    const Eigen::MatrixXd h = b.transpose() * b + 30.0 * Eigen::MatrixXd::Identity(30, 30);
    auto a = from_eigen(0.5 * (h + h.transpose()));
    std::vector<double> rhs(30);
    for (auto& v : rhs) v = u(rng);
    const Eigen::VectorXd ref = to_eigen(a).llt().solve(to_eigen(rhs));
    CgOptions o;
    o.rtol = 1e-10;
    OpLedger l;
    for (auto kind : {PreconditionerKind::none, PreconditionerKind::jacobi, PreconditionerKind::ilu0}) {
        auto pc = make_preconditioner(kind, a);
        auto res = cg_solve(a, rhs, *pc, o, {}, l);
        for (int i = 0; i < 30; ++i) CHECK(std::abs(res.x[i] - ref(i)) <= 1e-8);
        const auto& hist = res.report.residual_history;
        CHECK(hist.back() <= o.rtol * hist.front());
        CHECK(hist.back() <= *std::min_element(hist.begin(), hist.end() - 1));
    }
}

TEST_CASE("preconditioned CG agrees with plain CG on larger SPD systems") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto a = add(1.0, tridiagonal(200, 4.0, -1.0), 1.0,
                       CsrMatrix::from_triplets(200, 200, {{0, 199, -0.5}, {199, 0, -0.5}}));
    std::vector<double> rhs(200);
    for (auto& v : rhs) v = u(rng);
    CgOptions o;
    o.rtol = 1e-12;
    OpLedger l;
    const auto plain = cg_solve(a, rhs, IdentityPreconditioner{}, o, {}, l);
    for (auto kind : {PreconditionerKind::jacobi, PreconditionerKind::ilu0}) {
        auto pc = make_preconditioner(kind, a);
        const auto res = cg_solve(a, rhs, *pc, o, {}, l);
        CHECK(nnd::testing::max_abs_diff(res.x, plain.x) <= 1e-8);
    }
}

TEST_CASE("MatrixMarket and vector round trips") {
    std::istringstream sym("%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 1.5\n");
    auto a = read_matrix_market(sym);
    CHECK(a.at(0, 1) == -1.0);
    CHECK(a.at(1, 0) == -1.0);
    CHECK(a.nnz() == 5);
    std::stringstream out;
    write_matrix_market(a, out);
    auto b = read_matrix_market(out);
    CHECK(b.values() == a.values());
    CHECK(b.col_indices() == a.col_indices());

    std::istringstream bad("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK_THROWS_AS(read_matrix_market(bad), ParseError);

    std::istringstream v("1 2.5 # trailing\n-inf inf\n");
    auto vec = read_vector(v);
    REQUIRE(vec.size() == 4);
    CHECK(std::isinf(vec[2]));
    CHECK(vec[2] < 0);
}
