#include "nnd/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <string>

#include "nnd/error.hpp"

namespace nnd {

// ---------------------------------------------------------------------------
// Problem definition
// ---------------------------------------------------------------------------

void QpProblem::validate() const {
    const std::size_t n = q.size();
    if (H.rows() != n || H.cols() != n) throw DimensionError("QP: Hessian does not match linear term");
    if (lower.size() != n || upper.size() != n) throw DimensionError("QP: bound vectors do not match dimension");
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i])) throw InvalidArgument("QP: NaN bound");
        if (lower[i] > upper[i]) throw InvalidArgument("QP: lower > upper at index " + std::to_string(i));
    }
    if (H.symmetry_defect() > 1e-12 * std::max(1.0, H.max_abs()))
        throw InvalidArgument("QP: Hessian is not symmetric");
}

QpProblem QpProblem::unconstrained(CsrMatrix h, std::vector<double> q) {
    const std::size_t n = q.size();
    return QpProblem{std::move(h), std::move(q), std::vector<double>(n, -kInf), std::vector<double>(n, kInf)};
}

QpProblem QpProblem::boxed(CsrMatrix h, std::vector<double> q, double lower, double upper) {
    const std::size_t n = q.size();
    return QpProblem{std::move(h), std::move(q), std::vector<double>(n, lower), std::vector<double>(n, upper)};
}

QpProblem QpProblem::from_linearization(CsrMatrix j, std::span<const double> residual, std::span<const double> c_n,
                                        std::vector<double> lower, std::vector<double> upper) {
    const std::size_t n = residual.size();
    if (c_n.size() != n || j.rows() != n) throw DimensionError("from_linearization: dimension mismatch");
    std::vector<double> jc(n);
    multiply(j, c_n, jc);
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = residual[i] - jc[i];
    return QpProblem{std::move(j), std::move(q), std::move(lower), std::move(upper)};
}

double objective(const QpProblem& p, std::span<const double> c, OpLedger& ledger) {
    std::vector<double> hc(p.size());
    spmv(p.H, c, hc, ledger);
    return 0.5 * vec::dot(c, hc, ledger) + vec::dot(c, p.q, ledger);
}

std::vector<double> gradient(const QpProblem& p, std::span<const double> c, OpLedger& ledger) {
    std::vector<double> g(p.size());
    spmv(p.H, c, g, ledger);
    vec::axpy(g, 1.0, p.q, ledger);
    return g;
}

std::vector<double> project(std::span<const double> c, std::span<const double> lower, std::span<const double> upper) {
    if (lower.size() != c.size() || upper.size() != c.size()) throw DimensionError("project: length mismatch");
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = std::min(std::max(c[i], lower[i]), upper[i]);
    return out;
}

std::vector<double> projected_gradient(std::span<const double> g, std::span<const double> c,
                                       std::span<const double> lower, std::span<const double> upper) {
    if (g.size() != c.size() || lower.size() != c.size() || upper.size() != c.size())
        throw DimensionError("projected_gradient: length mismatch");
    std::vector<double> out(g.begin(), g.end());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] <= lower[i] && g[i] > 0) out[i] = 0;
        if (c[i] >= upper[i] && g[i] < 0) out[i] = 0;
    }
    return out;
}

std::string_view to_string(QpStatus status) {
    switch (status) {
        case QpStatus::converged: return "converged";
        case QpStatus::max_iterations: return "max-iter";
        case QpStatus::numerical_breakdown: return "numerical-breakdown";
    }
    return "?";
}

KktCertificate kkt_certificate(const QpProblem& p, std::span<const double> c, double tol_abs) {
    OpLedger scratch;
    const auto g = gradient(p, c, scratch);
    KktCertificate cert;
    cert.tolerance = tol_abs;
    cert.feasible = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < p.lower[i] || c[i] > p.upper[i]) cert.feasible = false;
        double violation;
        if (c[i] <= p.lower[i] && c[i] >= p.upper[i])
            violation = 0;
        else if (c[i] <= p.lower[i])
            violation = std::max(0.0, -g[i]);
        else if (c[i] >= p.upper[i])
            violation = std::max(0.0, g[i]);
        else
            violation = std::abs(g[i]);
        if (violation > cert.max_violation) {
            cert.max_violation = violation;
            cert.worst_index = i;
        }
    }
    cert.passed = cert.feasible && cert.max_violation <= tol_abs;
    return cert;
}

double kkt_tolerance(const QpProblem& p, std::span<const double> x0, double rtol) {
    OpLedger scratch;
    const auto g = gradient(p, x0, scratch);
    double s = 0;
    for (double v : g) s += v * v;
    return rtol * std::sqrt(s) + 1e-12;
}

// ---------------------------------------------------------------------------
// Shared solver machinery
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

// Objective and gradient from one SpMV: g = Hx + q, f = (x.g + x.q)/2.
struct Evaluator {
    const QpProblem& p;
    OpLedger& ledger;

    double operator()(std::span<const double> x, std::span<double> g) const {
        spmv(p.H, x, g, ledger);
        vec::axpy(g, 1.0, p.q, ledger);
        return 0.5 * (vec::dot(x, g, ledger) + vec::dot(x, p.q, ledger));
    }
};

void projected_gradient_into(std::span<const double> g, std::span<const double> x, const QpProblem& p,
                             std::span<double> out, OpLedger& ledger) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = g[i];
        if (x[i] <= p.lower[i] && v > 0) v = 0;
        if (x[i] >= p.upper[i] && v < 0) v = 0;
        out[i] = v;
    }
    // Reads g, x, both bounds; writes the result.
    ledger.record("VecBoundGradientProjection", 0, 8 * 5 * static_cast<std::uint64_t>(x.size()));
}

struct LimitedMemory {
    std::size_t depth;
    std::deque<std::vector<double>> s, y;
    std::deque<double> rho;

    void reset() {
        s.clear();
        y.clear();
        rho.clear();
    }

    void update(std::vector<double> ds, std::vector<double> dy, double sy) {
        if (depth == 0) return;
        if (s.size() == depth) {
            s.pop_front();
            y.pop_front();
            rho.pop_front();
        }
        s.push_back(std::move(ds));
        y.push_back(std::move(dy));
        rho.push_back(1.0 / sy);
    }

    // d = H_k v by the two-loop recursion, H_0 = (s^T y / y^T y) I.
    void apply(std::span<const double> v, std::span<double> d, OpLedger& ledger) const {
        vec::copy(v, d, ledger);
        const std::size_t m = s.size();
        std::vector<double> alpha(m);
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho[k] * vec::dot(s[k], d, ledger);
            vec::axpy(d, -alpha[k], y[k], ledger);
        }
        if (m > 0) {
            const double yy = vec::dot(y[m - 1], y[m - 1], ledger);
            vec::scale(d, 1.0 / (rho[m - 1] * yy), ledger);
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho[k] * vec::dot(y[k], d, ledger);
            vec::axpy(d, alpha[k] - beta, s[k], ledger);
        }
    }
};

struct LineSearchResult {
    bool accepted = false;
    double f = 0;
    double change = 0;  ///< f(x_out) - f(x)
};

// Backtracking on x(a) = P[x + a*dir]; Armijo test against the actual step.
// The objective change is 0.5 s.(g + g_out), exact for a quadratic and free
// of the cancellation in f(x_out) - f(x).
LineSearchResult projected_search(const QpProblem& p, const Evaluator& eval, std::span<const double> x,
                                  std::span<const double> g, std::span<const double> dir, double step0,
                                  double armijo, double backtrack, int max_backtracks, std::span<double> x_out,
                                  std::span<double> g_out, OpLedger& ledger) {
    const std::size_t n = x.size();
    std::vector<double> s(n), gsum(n);
    double step = step0;
    for (int k = 0; k <= max_backtracks; ++k, step *= backtrack) {
        vec::waxpy(x_out, step, dir, x, ledger);
        vec::clamp(x_out, p.lower, p.upper, ledger);
        vec::waxpy(s, -1.0, x, x_out, ledger);
        const double gs = vec::dot(g, s, ledger);
        if (!(gs < 0)) continue;
        const double ft = eval(x_out, g_out);
        vec::waxpy(gsum, 1.0, g, g_out, ledger);
        const double change = 0.5 * vec::dot(s, gsum, ledger);
        if (change <= armijo * gs) return {true, ft, change};
    }
    return {};
}

double norm_of(std::span<const double> v, OpLedger& ledger) { return vec::norm2(v, ledger); }

}  // namespace

// ---------------------------------------------------------------------------
// BLMVM
// ---------------------------------------------------------------------------

QpResult solve_blmvm(const QpProblem& p, const BlmvmOptions& opt, std::span<const double> x0, OpLedger& ledger) {
    p.validate();
    const std::size_t n = p.size();
    if (!x0.empty() && x0.size() != n) throw DimensionError("solve_blmvm: x0 has wrong length");

    const OpLedger start = ledger;
    const auto t0 = Clock::now();
    Evaluator eval{p, ledger};

    QpResult out;
    auto& rep = out.report;
    std::vector<double>& x = out.x;
    x = x0.empty() ? std::vector<double>(n, 0.0) : std::vector<double>(x0.begin(), x0.end());
    vec::clamp(x, p.lower, p.upper, ledger);

    std::vector<double> g(n), pg(n), d(n), x_new(n), g_new(n), pg_new(n);
    double f = eval(x, g);
    projected_gradient_into(g, x, p, pg, ledger);
    double pg_norm = norm_of(pg, ledger);
    rep.initial_projected_gradient_norm = pg_norm;
    const double tol = std::max(opt.rtol * pg_norm, opt.abs_floor);

    LimitedMemory memory{opt.memory, {}, {}, {}};
    auto finish = [&](QpStatus status) {
        rep.status = status;
        rep.projected_gradient_norm = pg_norm;
        rep.objective = f;
        rep.ledger = ledger.since(start);
        rep.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        return std::move(out);
    };

    while (true) {
        if (pg_norm <= tol) return finish(QpStatus::converged);
        if (rep.outer_iterations >= opt.max_iterations) return finish(QpStatus::max_iterations);

        memory.apply(pg, d, ledger);
        if (!(vec::dot(d, pg, ledger) > 0)) {
            memory.reset();
            vec::copy(pg, d, ledger);
        }
        vec::scale(d, -1.0, ledger);

        auto ls = projected_search(p, eval, x, g, d, 1.0, opt.armijo, opt.backtrack, opt.max_backtracks, x_new,
                                   g_new, ledger);
        if (!ls.accepted && !memory.s.empty()) {
            // Quasi-Newton direction failed; fall back to steepest descent.
            memory.reset();
            vec::copy(pg, d, ledger);
            vec::scale(d, -1.0, ledger);
            ls = projected_search(p, eval, x, g, d, 1.0, opt.armijo, opt.backtrack, opt.max_backtracks, x_new,
                                  g_new, ledger);
        }
        if (!ls.accepted) return finish(QpStatus::numerical_breakdown);

        projected_gradient_into(g_new, x_new, p, pg_new, ledger);
        std::vector<double> s(n), y(n);
        vec::waxpy(s, -1.0, x, x_new, ledger);
        vec::waxpy(y, -1.0, pg, pg_new, ledger);
        const double sy = vec::dot(s, y, ledger);
        if (sy > 1e-14 * norm_of(s, ledger) * norm_of(y, ledger) && sy > 0)
            memory.update(std::move(s), std::move(y), sy);

        x.swap(x_new);
        g.swap(g_new);
        pg.swap(pg_new);
        f = ls.f;
        pg_norm = norm_of(pg, ledger);
        ++rep.outer_iterations;
        if (opt.observer) opt.observer(rep.outer_iterations, x, f);
    }
}

// ---------------------------------------------------------------------------
// TRON
// ---------------------------------------------------------------------------

namespace {

enum class InnerStatus { converged, boundary, max_iterations, breakdown };

struct InnerResult {
    InnerStatus status;
    std::size_t iterations = 0;
};

// Truncated PCG for H d = -g inside ||d|| <= radius.
InnerResult steihaug_cg(const CsrMatrix& h, std::span<const double> g, const Preconditioner& pc, double rtol,
                        double radius, std::size_t max_iterations, std::span<double> d, OpLedger& ledger) {
    const std::size_t n = g.size();
    std::vector<double> r(n), z(n), pv(n), hp(n);
    vec::set(d, 0.0, ledger);
    vec::copy(g, r, ledger);
    vec::scale(r, -1.0, ledger);
    const double tol = rtol * vec::norm2(r, ledger);
    pc.apply(r, z, ledger);
    vec::copy(z, pv, ledger);
    double rz = vec::dot(r, z, ledger);
    if (!(rz > 0)) return {rz == 0 ? InnerStatus::converged : InnerStatus::breakdown, 0};

    InnerResult res{InnerStatus::max_iterations, 0};
    while (res.iterations < max_iterations) {
        spmv(h, pv, hp, ledger);
        const double php = vec::dot(pv, hp, ledger);
        ++res.iterations;
        if (!(php > 0)) {
            res.status = InnerStatus::breakdown;
            return res;
        }
        const double alpha = rz / php;
        // Stop on the trust-region boundary: ||d + tau p|| = radius.
        const double dd = vec::dot(d, d, ledger);
        const double dp = vec::dot(d, pv, ledger);
        const double pp = vec::dot(pv, pv, ledger);
        const double next = dd + 2 * alpha * dp + alpha * alpha * pp;
        if (next >= radius * radius) {
            const double disc = std::max(0.0, dp * dp + pp * (radius * radius - dd));
            const double tau = (-dp + std::sqrt(disc)) / pp;
            vec::axpy(d, tau, pv, ledger);
            res.status = InnerStatus::boundary;
            return res;
        }
        vec::axpy(d, alpha, pv, ledger);
        vec::axpy(r, -alpha, hp, ledger);
        if (vec::norm2(r, ledger) <= tol) {
            res.status = InnerStatus::converged;
            return res;
        }
        pc.apply(r, z, ledger);
        const double rz_next = vec::dot(r, z, ledger);
        if (!(rz_next > 0)) {
            res.status = InnerStatus::breakdown;
            return res;
        }
        vec::aypx(pv, rz_next / rz, z, ledger);
        rz = rz_next;
    }
    return res;
}

}  // namespace

QpResult solve_tron(const QpProblem& p, const TronOptions& opt, std::span<const double> x0, OpLedger& ledger) {
    p.validate();
    const std::size_t n = p.size();
    if (!x0.empty() && x0.size() != n) throw DimensionError("solve_tron: x0 has wrong length");
    if (!(opt.inner_rtol > 0 && opt.inner_rtol < 1)) throw InvalidArgument("solve_tron: inner_rtol must lie in (0,1)");

    const OpLedger start = ledger;
    const auto t0 = Clock::now();
    Evaluator eval{p, ledger};

    QpResult out;
    auto& rep = out.report;
    std::vector<double>& x = out.x;
    x = x0.empty() ? std::vector<double>(n, 0.0) : std::vector<double>(x0.begin(), x0.end());
    vec::clamp(x, p.lower, p.upper, ledger);

    std::vector<double> g(n), pg(n), x_new(n), g_new(n), dir(n), hs(n), s(n);
    double f = eval(x, g);
    projected_gradient_into(g, x, p, pg, ledger);
    double pg_norm = norm_of(pg, ledger);
    rep.initial_projected_gradient_norm = pg_norm;
    const double tol = std::max(opt.rtol * pg_norm, opt.abs_floor);
    double radius = norm_of(g, ledger);
    if (!(radius > 0)) radius = 1.0;

    auto finish = [&](QpStatus status) {
        rep.status = status;
        rep.projected_gradient_norm = pg_norm;
        rep.objective = f;
        rep.ledger = ledger.since(start);
        rep.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        return std::move(out);
    };
    auto active_pattern = [&](std::span<const double> xv) {
        std::vector<char> act(n);
        for (std::size_t i = 0; i < n; ++i) act[i] = xv[i] <= p.lower[i] ? 1 : (xv[i] >= p.upper[i] ? 2 : 0);
        return act;
    };
    auto accept = [&](double f_new) {
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        projected_gradient_into(g, x, p, pg, ledger);
        pg_norm = norm_of(pg, ledger);
    };

    while (true) {
        if (pg_norm <= tol) return finish(QpStatus::converged);
        if (rep.outer_iterations >= opt.max_iterations) return finish(QpStatus::max_iterations);

        // Gradient projection steps with the exact Cauchy length along -Pg.
        for (std::size_t k = 0; k < opt.gradient_projection_steps && pg_norm > tol; ++k) {
            const auto before = active_pattern(x);
            spmv(p.H, pg, hs, ledger);
            const double curv = vec::dot(pg, hs, ledger);
            double step = curv > 0 ? pg_norm * pg_norm / curv : radius / pg_norm;
            step = std::min(step, radius / pg_norm);
            vec::copy(pg, dir, ledger);
            vec::scale(dir, -1.0, ledger);
            auto ls = projected_search(p, eval, x, g, dir, step, opt.armijo, opt.backtrack, opt.max_backtracks,
                                       x_new, g_new, ledger);
            if (!ls.accepted) break;
            accept(ls.f);
            if (active_pattern(x) == before) break;
        }
        if (pg_norm <= tol) {
            ++rep.outer_iterations;
            if (opt.observer) opt.observer(rep.outer_iterations, x, f);
            return finish(QpStatus::converged);
        }

        // Newton step on the free variables.
        std::vector<Index> free;
        for (std::size_t i = 0; i < n; ++i) {
            if (p.lower[i] == p.upper[i]) continue;
            if (x[i] <= p.lower[i] && g[i] > 0) continue;
            if (x[i] >= p.upper[i] && g[i] < 0) continue;
            free.push_back(static_cast<Index>(i));
        }
        vec::set(dir, 0.0, ledger);
        if (!free.empty()) {
            const CsrMatrix h_ff = p.H.submatrix(free, free);
            std::vector<double> g_f(free.size()), d_f(free.size());
            for (std::size_t k = 0; k < free.size(); ++k) g_f[k] = g[free[k]];
            std::unique_ptr<Preconditioner> pc;
            try {
                pc = make_preconditioner(opt.preconditioner, h_ff, &ledger);
            } catch (const NumericalError&) {
                return finish(QpStatus::numerical_breakdown);
            }
            const std::size_t max_inner = opt.max_inner_iterations ? opt.max_inner_iterations : free.size() + 10;
            const auto inner = steihaug_cg(h_ff, g_f, *pc, opt.inner_rtol, radius, max_inner, d_f, ledger);
            rep.inner_iterations += inner.iterations;
            if (inner.status == InnerStatus::breakdown) return finish(QpStatus::numerical_breakdown);
            for (std::size_t k = 0; k < free.size(); ++k) dir[free[k]] = d_f[k];
        }

        auto ls = projected_search(p, eval, x, g, dir, 1.0, opt.armijo, opt.backtrack, opt.max_backtracks, x_new,
                                   g_new, ledger);
        ++rep.outer_iterations;
        if (!ls.accepted) {
            radius *= opt.shrink;
            if (radius < 1e-300) return finish(QpStatus::numerical_breakdown);
            continue;
        }
        vec::waxpy(s, -1.0, x, x_new, ledger);
        spmv(p.H, s, hs, ledger);
        const double predicted = -(vec::dot(g, s, ledger) + 0.5 * vec::dot(s, hs, ledger));
        const double actual = -ls.change;
        const double ratio = predicted > 0 ? actual / predicted : (actual > 0 ? 1.0 : -1.0);
        if (ratio < opt.eta_shrink)
            radius *= opt.shrink;
        else if (ratio > opt.eta_expand)
            radius *= opt.expand;
        if (ratio > opt.eta_accept) {
            accept(ls.f);
            if (opt.observer) opt.observer(rep.outer_iterations, x, f);
        }
    }
}

}  // namespace nnd
