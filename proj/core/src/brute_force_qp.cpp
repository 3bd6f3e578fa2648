#include <algorithm>
#include <cmath>
#include <vector>

#include "nnd/error.hpp"
#include "nnd/qp.hpp"

namespace nnd {

namespace {

// In-place Cholesky of a dense SPD matrix; false if not positive definite.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0)) return false;
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / d;
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * n + k] * b[k];
        b[i] /= l[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) b[i] -= l[k * n + i] * b[k];
        b[i] /= l[i * n + i];
    }
}

}  // namespace

BruteForceQpResult brute_force_qp(const QpProblem& p) {
    p.validate();
    const std::size_t n = p.size();
    if (n > 20) throw InvalidArgument("brute_force_qp: dimension exceeds 20");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p.lower[i]) || !std::isfinite(p.upper[i]))
            throw InvalidArgument("brute_force_qp: bounds must be finite");

    const auto h = p.H.to_dense();
    double scale = 1.0;
    for (double v : h) scale = std::max(scale, std::abs(v));
    for (double v : p.q) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(p.lower[i]), std::abs(p.upper[i])});
    const double tol = 1e-10 * scale;

    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;

    BruteForceQpResult out;
    std::vector<int> state(n);
    std::vector<double> x(n), g(n);
    for (std::size_t code = 0; code < total; ++code) {
        ++out.assignments_tried;
        std::size_t c = code;
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i, c /= 3) {
            state[i] = static_cast<int>(c % 3);
            if (state[i] == 0)
                free.push_back(i);
            else
                x[i] = state[i] == 1 ? p.lower[i] : p.upper[i];
        }
        const std::size_t m = free.size();
        if (m > 0) {
            std::vector<double> hff(m * m), rhs(m);
            for (std::size_t a = 0; a < m; ++a) {
                const std::size_t i = free[a];
                double r = -p.q[i];
                for (std::size_t j = 0; j < n; ++j)
                    if (state[j] != 0) r -= h[i * n + j] * x[j];
                rhs[a] = r;
                for (std::size_t b = 0; b < m; ++b) hff[a * m + b] = h[i * n + free[b]];
            }
            if (!cholesky(hff, m)) continue;
            cholesky_solve(hff, m, rhs);
            for (std::size_t a = 0; a < m; ++a) x[free[a]] = rhs[a];
        }
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            double gi = p.q[i];
            for (std::size_t j = 0; j < n; ++j) gi += h[i * n + j] * x[j];
            g[i] = gi;
            if (state[i] == 0) ok = x[i] >= p.lower[i] - tol && x[i] <= p.upper[i] + tol;
            else if (state[i] == 1) ok = gi >= -tol;
            else ok = gi <= tol;
        }
        if (!ok) continue;
        out.x = project(x, p.lower, p.upper);
        out.multipliers.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] != 0) out.multipliers[i] = g[i];
        return out;
    }
    throw NumericalError("brute_force_qp: no KKT point found");
}

}  // namespace nnd
