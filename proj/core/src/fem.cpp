#include "nnd/fem.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <string>
#include <thread>

#include "nnd/error.hpp"

namespace nnd {

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

void DispersionParams::validate() const {
    if (!(alpha_T >= 0)) throw InvalidArgument("dispersion: alpha_T must be >= 0");
    if (!(alpha_L >= alpha_T)) throw InvalidArgument("dispersion: alpha_L must be >= alpha_T");
    if (!(d_M >= 0)) throw InvalidArgument("dispersion: d_M must be >= 0");
}

Mat3 dispersion_tensor(const Vec3& v, const DispersionParams& p) {
    p.validate();
    const double speed = norm(v);
    if (speed == 0.0) {
        if (p.d_M == 0.0) throw NumericalError("dispersion tensor is singular: zero velocity and d_M = 0");
        Mat3 d = identity3();
        for (auto& row : d)
            for (double& x : row) x *= p.d_M;
        return d;
    }
    Mat3 d{};
    const double iso = p.alpha_T * speed + p.d_M;
    const double aniso = (p.alpha_L - p.alpha_T) / speed;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d[i][j] = (i == j ? iso : 0.0) + aniso * v[i] * v[j];
    return d;
}

void check_diffusivity(const Mat3& d, std::size_t cell) {
    double scale = 0;
    for (const auto& row : d)
        for (double x : row) scale = std::max(scale, std::abs(x));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(d[i][j] - d[j][i]) > 1e-14 * scale)
                throw NumericalError("diffusivity tensor in cell " + std::to_string(cell) + " is not symmetric");
    const double m1 = d[0][0];
    const double m2 = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    const double m3 = det3(d);
    if (!(m1 > 0 && m2 > 0 && m3 > 0))
        throw NumericalError("diffusivity tensor in cell " + std::to_string(cell) + " is not positive definite");
}

DiffusivityField DiffusivityField::constant(const Mat3& d) {
    check_diffusivity(d, 0);
    return DiffusivityField([d](const Vec3&, std::size_t) { return d; });
}

DiffusivityField DiffusivityField::uniform_dispersion(const Vec3& velocity, const DispersionParams& p) {
    return constant(dispersion_tensor(velocity, p));
}

DiffusivityField DiffusivityField::cellwise_dispersion(std::span<const Vec3> cell_velocity,
                                                       const DispersionParams& p) {
    auto cache = std::make_shared<std::vector<Mat3>>();
    cache->reserve(cell_velocity.size());
    for (std::size_t c = 0; c < cell_velocity.size(); ++c) {
        cache->push_back(dispersion_tensor(cell_velocity[c], p));
        check_diffusivity(cache->back(), c);
    }
    return DiffusivityField([cache](const Vec3&, std::size_t cell) {
        if (cell >= cache->size()) throw DimensionError("cellwise velocity field has fewer entries than cells");
        return (*cache)[cell];
    });
}

Mat3 DiffusivityField::operator()(const Vec3& x, std::size_t cell) const {
    if (!eval_) throw InvalidArgument("diffusivity field is empty");
    Mat3 d = eval_(x, cell);
    check_diffusivity(d, cell);
    return d;
}

PointwisePhysics steady_diffusion(DiffusivityField d, ScalarField source) {
    auto dp = std::make_shared<DiffusivityField>(std::move(d));
    PointwisePhysics ph;
    ph.f0 = [source](const PointState& s) { return -source(s.x, s.t); };
    ph.f1 = [dp](const PointState& s) { return matvec((*dp)(s.x, s.cell), s.grad_c); };
    ph.f0_c = [](const PointState&) { return 0.0; };
    ph.f0_gradc = [](const PointState&) { return Vec3{0, 0, 0}; };
    ph.f1_c = [](const PointState&) { return Vec3{0, 0, 0}; };
    ph.f1_gradc = [dp](const PointState& s) { return (*dp)(s.x, s.cell); };
    return ph;
}

PointwisePhysics transient_diffusion(DiffusivityField d, ScalarField source) {
    PointwisePhysics ph = steady_diffusion(std::move(d), source);
    ph.f0 = [source](const PointState& s) { return (s.c - s.c_prev) / s.dt - source(s.x, s.t); };
    ph.f0_c = [](const PointState& s) { return 1.0 / s.dt; };
    return ph;
}

// ---------------------------------------------------------------------------
// Element kernels
// ---------------------------------------------------------------------------

namespace {

struct RefPoint {
    Vec3 xi;
    double w;
};

const std::vector<RefPoint>& reference_rule(ElementKind kind) {
    static const std::vector<RefPoint> tet = [] {
        const double a = 0.5854101966249685, b = 0.1381966011250105;
        const double w = 1.0 / 24.0;
        return std::vector<RefPoint>{{{b, b, b}, w}, {{a, b, b}, w}, {{b, a, b}, w}, {{b, b, a}, w}};
    }();
    static const std::vector<RefPoint> hex = [] {
        const double g = 1.0 / std::sqrt(3.0);
        std::vector<RefPoint> pts;
        for (double z : {-g, g})
            for (double y : {-g, g})
                for (double x : {-g, g}) pts.push_back({{x, y, z}, 1.0});
        return pts;
    }();
    return kind == ElementKind::tet4 ? tet : hex;
}

constexpr std::array<std::array<double, 3>, 8> kHexRef{{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}}};

void reference_basis(ElementKind kind, const Vec3& xi, std::array<double, 8>& n, std::array<Vec3, 8>& dn) {
    if (kind == ElementKind::tet4) {
        n[0] = 1 - xi[0] - xi[1] - xi[2];
        n[1] = xi[0];
        n[2] = xi[1];
        n[3] = xi[2];
        dn[0] = {-1, -1, -1};
        dn[1] = {1, 0, 0};
        dn[2] = {0, 1, 0};
        dn[3] = {0, 0, 1};
        return;
    }
    for (int a = 0; a < 8; ++a) {
        const double r = kHexRef[a][0], s = kHexRef[a][1], t = kHexRef[a][2];
        const double fr = 1 + r * xi[0], fs = 1 + s * xi[1], ft = 1 + t * xi[2];
        n[a] = 0.125 * fr * fs * ft;
        dn[a] = {0.125 * r * fs * ft, 0.125 * s * fr * ft, 0.125 * t * fr * fs};
    }
}

std::vector<Vec3> corners_of(const Mesh& mesh, std::size_t c) {
    std::vector<Vec3> x;
    for (Index v : mesh.cell(c)) x.push_back(mesh.vertices()[v]);
    return x;
}

// Runs `work(c, sink)` for every cell on `threads` contiguous blocks and
// concatenates the per-block outputs in block order.
template <typename T, typename Work>
std::vector<T> for_cells(std::size_t ncells, std::size_t threads, Work work) {
    threads = std::max<std::size_t>(1, std::min(threads, ncells));
    std::vector<std::vector<T>> parts(threads);
    auto run_block = [&](std::size_t b) {
        const std::size_t lo = ncells * b / threads, hi = ncells * (b + 1) / threads;
        for (std::size_t c = lo; c < hi; ++c) work(c, parts[b]);
    };
    if (threads == 1) {
        run_block(0);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (std::size_t b = 0; b < threads; ++b)
            pool.emplace_back([&, b] {
                try {
                    run_block(b);
                } catch (...) {
                    errors[b] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    std::vector<T> out;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    out.reserve(total);
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

struct VectorEntry {
    Index row;
    double value;
};

std::vector<double> scatter(std::size_t n, const std::vector<VectorEntry>& entries) {
    std::vector<double> out(n, 0.0);
    for (const auto& e : entries) out[e.row] += e.value;
    return out;
}

PointState evaluate_state(const QuadPoint& q, std::span<const Index> cell, std::span<const double> c,
                          std::span<const double> c_prev, std::size_t cell_id, double t, double dt) {
    PointState s;
    s.x = q.x;
    s.t = t;
    s.dt = dt;
    s.cell = cell_id;
    for (std::size_t a = 0; a < cell.size(); ++a) {
        const double ca = c.empty() ? 0.0 : c[cell[a]];
        s.c += q.n[a] * ca;
        s.grad_c = s.grad_c + ca * q.dn[a];
        if (!c_prev.empty()) s.c_prev += q.n[a] * c_prev[cell[a]];
    }
    return s;
}

}  // namespace

int num_quadrature_points(ElementKind kind) { return static_cast<int>(reference_rule(kind).size()); }

std::vector<QuadPoint> tabulate(ElementKind kind, std::span<const Vec3> x, std::size_t cell) {
    const int nv = vertices_per_cell(kind);
    if (static_cast<int>(x.size()) != nv) throw DimensionError("tabulate: wrong number of corners");
    std::vector<QuadPoint> out;
    out.reserve(reference_rule(kind).size());
    for (const auto& rp : reference_rule(kind)) {
        QuadPoint q;
        std::array<Vec3, 8> dref{};
        reference_basis(kind, rp.xi, q.n, dref);
        Mat3 jac{};
        for (int a = 0; a < nv; ++a) {
            q.x = q.x + q.n[a] * x[a];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) jac[i][j] += x[a][i] * dref[a][j];
        }
        const double det = det3(jac);
        if (!(det > 0)) throw InvertedElementError(cell, "non-positive Jacobian determinant (" + std::to_string(det) + ")");
        // dN/dx = J^{-T} dN/dxi, with J^{-1} = adj(J)/det.
        Mat3 inv{};
        inv[0][0] = (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) / det;
        inv[0][1] = (jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2]) / det;
        inv[0][2] = (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]) / det;
        inv[1][0] = (jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2]) / det;
        inv[1][1] = (jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0]) / det;
        inv[1][2] = (jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2]) / det;
        inv[2][0] = (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]) / det;
        inv[2][1] = (jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1]) / det;
        inv[2][2] = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]) / det;
        for (int a = 0; a < nv; ++a)
            for (int i = 0; i < 3; ++i)
                q.dn[a][i] = inv[0][i] * dref[a][0] + inv[1][i] * dref[a][1] + inv[2][i] * dref[a][2];
        q.weight = rp.w * det;
        out.push_back(q);
    }
    return out;
}

std::vector<double> element_stiffness(ElementKind kind, std::span<const Vec3> corners, std::span<const Mat3> d,
                                      std::size_t cell) {
    const auto qps = tabulate(kind, corners, cell);
    if (d.size() != qps.size()) throw DimensionError("element_stiffness: need one tensor per quadrature point");
    const int n = vertices_per_cell(kind);
    std::vector<double> k(static_cast<std::size_t>(n * n), 0.0);
    for (std::size_t q = 0; q < qps.size(); ++q)
        for (int b = 0; b < n; ++b) {
            const Vec3 ddn = matvec(d[q], qps[q].dn[b]);
            for (int a = 0; a < n; ++a) k[a * n + b] += qps[q].weight * nnd::dot(qps[q].dn[a], ddn);
        }
    return k;
}

std::vector<double> element_mass(ElementKind kind, std::span<const Vec3> corners, std::size_t cell) {
    const auto qps = tabulate(kind, corners, cell);
    const int n = vertices_per_cell(kind);
    std::vector<double> m(static_cast<std::size_t>(n * n), 0.0);
    for (const auto& q : qps)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m[a * n + b] += q.weight * q.n[a] * q.n[b];
    return m;
}

std::vector<double> element_load(ElementKind kind, std::span<const Vec3> corners,
                                 const std::function<double(const Vec3&)>& f, std::size_t cell) {
    const auto qps = tabulate(kind, corners, cell);
    const int n = vertices_per_cell(kind);
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    for (const auto& q : qps) {
        const double fq = f(q.x);
        for (int a = 0; a < n; ++a) r[a] += q.weight * q.n[a] * fq;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Global assembly
// ---------------------------------------------------------------------------

void BoundarySpec::validate(const Mesh& mesh) const {
    if (dirichlet.empty()) throw ConfigError("boundary conditions need at least one Dirichlet marker");
    const auto present = mesh.markers();
    auto exists = [&](int m) { return std::binary_search(present.begin(), present.end(), m); };
    for (const auto& [m, fn] : dirichlet) {
        if (neumann.count(m))
            throw ConfigError("marker " + std::to_string(m) + " has both Dirichlet and Neumann conditions");
        if (!exists(m)) throw ConfigError("Dirichlet marker " + std::to_string(m) + " does not occur in the mesh");
        if (!fn) throw ConfigError("Dirichlet marker " + std::to_string(m) + " has no value function");
    }
    for (const auto& [m, fn] : neumann) {
        if (!exists(m)) throw ConfigError("Neumann marker " + std::to_string(m) + " does not occur in the mesh");
        if (!fn) throw ConfigError("Neumann marker " + std::to_string(m) + " has no flux function");
    }
}

std::vector<double> assemble_residual(const Mesh& mesh, const PointwisePhysics& ph, std::span<const double> c,
                                      std::span<const double> c_prev, double t, double dt,
                                      const AssemblyOptions& options) {
    const std::size_t nv = mesh.num_vertices();
    if ((!c.empty() && c.size() != nv) || (!c_prev.empty() && c_prev.size() != nv))
        throw DimensionError("assemble_residual: state length does not match vertex count");
    auto entries = for_cells<VectorEntry>(mesh.num_cells(), options.threads, [&](std::size_t e, auto& sink) {
        auto cell = mesh.cell(e);
        const auto x = corners_of(mesh, e);
        std::array<double, 8> re{};
        for (const auto& q : tabulate(mesh.kind(), x, e)) {
            const PointState s = evaluate_state(q, cell, c, c_prev, e, t, dt);
            const double f0 = ph.f0(s);
            const Vec3 f1 = ph.f1(s);
            for (std::size_t a = 0; a < cell.size(); ++a) re[a] += q.weight * (q.n[a] * f0 + nnd::dot(q.dn[a], f1));
        }
        for (std::size_t a = 0; a < cell.size(); ++a) sink.push_back({cell[a], re[a]});
    });
    return scatter(nv, entries);
}

CsrMatrix assemble_jacobian(const Mesh& mesh, const PointwisePhysics& ph, std::span<const double> c,
                            std::span<const double> c_prev, double t, double dt, const AssemblyOptions& options) {
    const std::size_t nv = mesh.num_vertices();
    if ((!c.empty() && c.size() != nv) || (!c_prev.empty() && c_prev.size() != nv))
        throw DimensionError("assemble_jacobian: state length does not match vertex count");
    auto triplets = for_cells<Triplet>(mesh.num_cells(), options.threads, [&](std::size_t e, auto& sink) {
        auto cell = mesh.cell(e);
        const std::size_t n = cell.size();
        const auto x = corners_of(mesh, e);
        std::array<double, 64> ke{};
        for (const auto& q : tabulate(mesh.kind(), x, e)) {
            const PointState s = evaluate_state(q, cell, c, c_prev, e, t, dt);
            const double f00 = ph.f0_c(s);
            const Vec3 f01 = ph.f0_gradc(s);
            const Vec3 f10 = ph.f1_c(s);
            const Mat3 f11 = ph.f1_gradc(s);
            for (std::size_t b = 0; b < n; ++b) {
                const Vec3 f11_db = matvec(f11, q.dn[b]);
                const double f01_db = nnd::dot(f01, q.dn[b]);
                for (std::size_t a = 0; a < n; ++a)
                    ke[a * n + b] += q.weight * (q.n[a] * f00 * q.n[b] + q.n[a] * f01_db +
                                                 nnd::dot(q.dn[a], f10) * q.n[b] + nnd::dot(q.dn[a], f11_db));
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) sink.push_back({cell[a], cell[b], ke[a * n + b]});
    });
    return CsrMatrix::from_triplets(nv, nv, std::move(triplets));
}

CsrMatrix assemble_mass(const Mesh& mesh, const AssemblyOptions& options) {
    const std::size_t nv = mesh.num_vertices();
    auto triplets = for_cells<Triplet>(mesh.num_cells(), options.threads, [&](std::size_t e, auto& sink) {
        auto cell = mesh.cell(e);
        const std::size_t n = cell.size();
        const auto me = element_mass(mesh.kind(), corners_of(mesh, e), e);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) sink.push_back({cell[a], cell[b], me[a * n + b]});
    });
    return CsrMatrix::from_triplets(nv, nv, std::move(triplets));
}

std::vector<double> assemble_neumann(const Mesh& mesh, const BoundarySpec& bc, double t) {
    std::vector<double> out(mesh.num_vertices(), 0.0);
    if (bc.neumann.empty()) return out;
    const auto& xv = mesh.vertices();
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        auto it = bc.neumann.find(mesh.facets()[f].marker);
        if (it == bc.neumann.end()) continue;
        auto v = mesh.facet(f);
        if (mesh.kind() == ElementKind::tet4) {
            const double area = 0.5 * norm(cross(xv[v[1]] - xv[v[0]], xv[v[2]] - xv[v[0]]));
            static constexpr double bary[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6},
                                                  {1.0 / 6, 1.0 / 6, 2.0 / 3}};
            for (const auto& l : bary) {
                const Vec3 xq = l[0] * xv[v[0]] + l[1] * xv[v[1]] + l[2] * xv[v[2]];
                const double qv = it->second(xq, t);
                for (int a = 0; a < 3; ++a) out[v[a]] += area / 3.0 * l[a] * qv;
            }
        } else {
            const double g = 1.0 / std::sqrt(3.0);
            static constexpr double ref[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
            for (double s : {-g, g})
                for (double r : {-g, g}) {
                    std::array<double, 4> n{};
                    Vec3 xq{0, 0, 0}, dr{0, 0, 0}, ds{0, 0, 0};
                    for (int a = 0; a < 4; ++a) {
                        n[a] = 0.25 * (1 + ref[a][0] * r) * (1 + ref[a][1] * s);
                        xq = xq + n[a] * xv[v[a]];
                        dr = dr + (0.25 * ref[a][0] * (1 + ref[a][1] * s)) * xv[v[a]];
                        ds = ds + (0.25 * ref[a][1] * (1 + ref[a][0] * r)) * xv[v[a]];
                    }
                    const double w = norm(cross(dr, ds));
                    const double qv = it->second(xq, t);
                    for (int a = 0; a < 4; ++a) out[v[a]] += w * n[a] * qv;
                }
        }
    }
    return out;
}

std::vector<DirichletDof> collect_dirichlet(const Mesh& mesh, const BoundarySpec& bc, double t) {
    std::map<Index, double> values;
    for (const auto& [marker, fn] : bc.dirichlet) {
        for (Index v : mesh.marked_vertices(marker)) {
            const double g = fn(mesh.vertices()[v], t);
            auto [it, inserted] = values.emplace(v, g);
            if (!inserted && it->second != g)
                throw ConfigError("vertex " + std::to_string(v) + " receives conflicting Dirichlet values " +
                                  std::to_string(it->second) + " and " + std::to_string(g) + " (marker " +
                                  std::to_string(marker) + ")");
        }
    }
    std::vector<DirichletDof> out;
    out.reserve(values.size());
    for (const auto& [dof, g] : values) out.push_back({dof, g});
    return out;
}

AssembledSystem assemble(const Mesh& mesh, const PointwisePhysics& physics, const BoundarySpec& bc, double t,
                         const AssemblyOptions& options) {
    bc.validate(mesh);
    AssembledSystem sys;
    sys.K = assemble_jacobian(mesh, physics, {}, {}, t, 0.0, options);
    sys.M = assemble_mass(mesh, options);
    sys.f = assemble_residual(mesh, physics, {}, {}, t, 0.0, options);
    const auto neumann = assemble_neumann(mesh, bc, t);
    for (std::size_t i = 0; i < sys.f.size(); ++i) sys.f[i] = -sys.f[i] + neumann[i];
    sys.dirichlet = collect_dirichlet(mesh, bc, t);
    return sys;
}

// ---------------------------------------------------------------------------
// Dirichlet elimination
// ---------------------------------------------------------------------------

DofMap::DofMap(std::size_t n, std::span<const DirichletDof> dirichlet)
    : full_to_free_(n, 0), prescribed_(n, 0.0) {
    std::vector<bool> set(n, false);
    for (const auto& d : dirichlet) {
        if (d.dof < 0 || static_cast<std::size_t>(d.dof) >= n)
            throw ConfigError("Dirichlet dof " + std::to_string(d.dof) + " out of range");
        if (set[d.dof] && prescribed_[d.dof] != d.value)
            throw ConfigError("Dirichlet dof " + std::to_string(d.dof) + " prescribed with conflicting values");
        set[d.dof] = true;
        prescribed_[d.dof] = d.value;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (set[i]) {
            full_to_free_[i] = -1;
        } else {
            full_to_free_[i] = static_cast<Index>(free_.size());
            free_.push_back(static_cast<Index>(i));
        }
    }
}

std::vector<double> DofMap::expand(std::span<const double> free_values) const {
    if (free_values.size() != free_.size()) throw DimensionError("DofMap::expand: wrong length");
    std::vector<double> full = prescribed_;
    for (std::size_t k = 0; k < free_.size(); ++k) full[free_[k]] = free_values[k];
    return full;
}

std::vector<double> DofMap::restrict_to_free(std::span<const double> full) const {
    if (full.size() != num_dofs()) throw DimensionError("DofMap::restrict_to_free: wrong length");
    std::vector<double> out(free_.size());
    for (std::size_t k = 0; k < free_.size(); ++k) out[k] = full[free_[k]];
    return out;
}

ReducedSystem reduce(const CsrMatrix& a, std::span<const double> b, const DofMap& dofs) {
    if (a.rows() != dofs.num_dofs() || a.cols() != dofs.num_dofs() || b.size() != dofs.num_dofs())
        throw DimensionError("reduce: system does not match dof map");
    ReducedSystem out;
    out.K = a.submatrix(dofs.free_dofs(), dofs.free_dofs());
    std::vector<double> ag(a.rows());
    multiply(a, dofs.prescribed(), ag);
    out.f.resize(dofs.num_free());
    for (std::size_t k = 0; k < dofs.num_free(); ++k) {
        const auto i = static_cast<std::size_t>(dofs.free_dofs()[k]);
        out.f[k] = b[i] - ag[i];
    }
    out.dofs = dofs;
    return out;
}

ReducedSystem apply_dirichlet(const AssembledSystem& system) {
    return reduce(system.K, system.f, DofMap(system.K.rows(), system.dirichlet));
}

}  // namespace nnd
