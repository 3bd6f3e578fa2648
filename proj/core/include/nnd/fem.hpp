#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "nnd/geometry.hpp"
#include "nnd/mesh.hpp"
#include "nnd/sparse.hpp"

namespace nnd {

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

struct DispersionParams {
    double alpha_L = 1.0;  ///< longitudinal dispersivity
    double alpha_T = 0.0;  ///< transverse dispersivity
    double d_M = 0.0;      ///< molecular diffusivity

    /// Requires alpha_L >= alpha_T >= 0 and d_M >= 0.
    void validate() const;
};

/// (alpha_T |v| + d_M) I + (alpha_L - alpha_T) v v^T / |v|; d_M I when v = 0.
/// Throws NumericalError when v = 0 and d_M = 0 (singular tensor).
Mat3 dispersion_tensor(const Vec3& v, const DispersionParams& p);

/// Throws NumericalError unless `d` is symmetric (1e-14 relative) and
/// positive definite by Sylvester's criterion.
void check_diffusivity(const Mat3& d, std::size_t cell);

/// D(x), optionally cell-dependent. Every evaluation is checked for symmetry
/// and positive definiteness.
class DiffusivityField {
public:
    using Evaluator = std::function<Mat3(const Vec3& x, std::size_t cell)>;

    DiffusivityField() = default;
    explicit DiffusivityField(Evaluator eval) : eval_(std::move(eval)) {}

    static DiffusivityField constant(const Mat3& d);
    /// Dispersion tensor of one uniform velocity, evaluated once.
    static DiffusivityField uniform_dispersion(const Vec3& velocity, const DispersionParams& p);
    /// Dispersion tensor of a cellwise-constant velocity field, cached per cell.
    static DiffusivityField cellwise_dispersion(std::span<const Vec3> cell_velocity, const DispersionParams& p);

    Mat3 operator()(const Vec3& x, std::size_t cell) const;

private:
    Evaluator eval_;
};

using ScalarField = std::function<double(const Vec3& x, double t)>;

inline ScalarField constant_field(double value) {
    return [value](const Vec3&, double) { return value; };
}

// ---------------------------------------------------------------------------
// Pointwise physics
// ---------------------------------------------------------------------------

/// Field state at one quadrature point.
struct PointState {
    double c = 0;
    Vec3 grad_c{0, 0, 0};
    double c_prev = 0;  ///< previous time level, for rate terms
    Vec3 x{0, 0, 0};
    double t = 0;
    double dt = 0;
    std::size_t cell = 0;
};

/// Weak form integrand w F0 + grad(w) . F1 together with its four derivative
/// blocks. The residual and Jacobian assemblers only ever call these.
struct PointwisePhysics {
    std::function<double(const PointState&)> f0;
    std::function<Vec3(const PointState&)> f1;
    std::function<double(const PointState&)> f0_c;
    std::function<Vec3(const PointState&)> f0_gradc;
    std::function<Vec3(const PointState&)> f1_c;
    std::function<Mat3(const PointState&)> f1_gradc;
};

/// F0 = -f(x), F1 = D(x) grad c.
PointwisePhysics steady_diffusion(DiffusivityField d, ScalarField source);

/// F0 = (c - c_prev)/dt - f(x,t), F1 = D(x) grad c; F0_c = 1/dt.
PointwisePhysics transient_diffusion(DiffusivityField d, ScalarField source);

// ---------------------------------------------------------------------------
// Element kernels
// ---------------------------------------------------------------------------

struct QuadPoint {
    std::array<double, 8> n{};
    std::array<Vec3, 8> dn{};  ///< physical gradients
    double weight = 0;         ///< quadrature weight times |det J|
    Vec3 x{0, 0, 0};
};

/// Four-point degree-2 rule on tets, 2x2x2 Gauss on hexes. Throws
/// InvertedElementError (naming `cell`) when det J <= 0 at any point.
std::vector<QuadPoint> tabulate(ElementKind kind, std::span<const Vec3> corners, std::size_t cell = 0);

int num_quadrature_points(ElementKind kind);

/// Row-major n x n element matrices; D holds one tensor per quadrature point.
std::vector<double> element_stiffness(ElementKind kind, std::span<const Vec3> corners, std::span<const Mat3> d,
                                      std::size_t cell = 0);
std::vector<double> element_mass(ElementKind kind, std::span<const Vec3> corners, std::size_t cell = 0);
std::vector<double> element_load(ElementKind kind, std::span<const Vec3> corners,
                                 const std::function<double(const Vec3&)>& f, std::size_t cell = 0);

// ---------------------------------------------------------------------------
// Global assembly
// ---------------------------------------------------------------------------

struct BoundarySpec {
    std::map<int, ScalarField> dirichlet;  ///< marker -> prescribed value c(x, t)
    std::map<int, ScalarField> neumann;    ///< marker -> prescribed inward flux q(x, t)

    /// Throws ConfigError if markers overlap, no Dirichlet marker exists, or a
    /// marker does not occur in the mesh.
    void validate(const Mesh& mesh) const;
};

struct DirichletDof {
    Index dof;
    double value;
};

struct AssemblyOptions {
    /// Cells are split into contiguous blocks, one per thread; contributions
    /// are merged in cell order so every thread count gives identical bits.
    std::size_t threads = 1;
};

struct AssembledSystem {
    CsrMatrix K;  ///< stiffness (Jacobian of the residual)
    CsrMatrix M;  ///< consistent capacity matrix
    std::vector<double> f;
    std::vector<DirichletDof> dirichlet;
};

/// r(c) = A_e [N^T B^T] W [F0; F1].
std::vector<double> assemble_residual(const Mesh& mesh, const PointwisePhysics& physics, std::span<const double> c,
                                      std::span<const double> c_prev, double t, double dt,
                                      const AssemblyOptions& options = {});

/// J(c) = A_e [N^T B^T] W [F_ij] [N; B].
CsrMatrix assemble_jacobian(const Mesh& mesh, const PointwisePhysics& physics, std::span<const double> c,
                            std::span<const double> c_prev, double t, double dt,
                            const AssemblyOptions& options = {});

CsrMatrix assemble_mass(const Mesh& mesh, const AssemblyOptions& options = {});

/// Integral of N q over every Neumann-marked facet.
std::vector<double> assemble_neumann(const Mesh& mesh, const BoundarySpec& bc, double t);

/// Nodal values of every Dirichlet marker. Throws ConfigError when one
/// vertex receives two different values.
std::vector<DirichletDof> collect_dirichlet(const Mesh& mesh, const BoundarySpec& bc, double t);

/// Linear physics only: K = J(0), f = -r(0) + Neumann load.
AssembledSystem assemble(const Mesh& mesh, const PointwisePhysics& physics, const BoundarySpec& bc, double t = 0,
                         const AssemblyOptions& options = {});

// ---------------------------------------------------------------------------
// Dirichlet elimination
// ---------------------------------------------------------------------------

/// Split of the full dof range into free and prescribed dofs.
class DofMap {
public:
    DofMap() = default;
    /// Throws ConfigError on a duplicate dof with conflicting values.
    DofMap(std::size_t num_dofs, std::span<const DirichletDof> dirichlet);

    std::size_t num_dofs() const noexcept { return full_to_free_.size(); }
    std::size_t num_free() const noexcept { return free_.size(); }
    const std::vector<Index>& free_dofs() const noexcept { return free_; }
    bool constrained(std::size_t dof) const { return full_to_free_[dof] < 0; }

    /// Full-length vector holding prescribed values and zeros on free dofs.
    const std::vector<double>& prescribed() const noexcept { return prescribed_; }

    std::vector<double> expand(std::span<const double> free_values) const;
    std::vector<double> restrict_to_free(std::span<const double> full) const;

private:
    std::vector<Index> free_;
    std::vector<Index> full_to_free_;
    std::vector<double> prescribed_;
};

struct ReducedSystem {
    CsrMatrix K;
    std::vector<double> f;
    DofMap dofs;
};

/// Symmetric elimination: K_FF, f_F - K_FD g.
ReducedSystem reduce(const CsrMatrix& a, std::span<const double> b, const DofMap& dofs);
ReducedSystem apply_dirichlet(const AssembledSystem& system);

}  // namespace nnd
