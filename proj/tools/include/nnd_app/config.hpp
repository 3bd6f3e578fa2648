#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnd/fem.hpp"
#include "nnd/mesh.hpp"
#include "nnd/perf.hpp"
#include "nnd/transient.hpp"
#include "nnd_app/toml.hpp"

namespace nnd::app {

struct MeshSpec {
    std::string generator = "box";  ///< box | cube_with_hole | file
    int nx = 1, ny = 1, nz = 1;     ///< box divisions; `n` sets all three
    int n = 9;                      ///< cube_with_hole divisions
    ElementKind kind = ElementKind::tet4;
    int refine = 0;
    std::filesystem::path path;
};

struct PhysicsSpec {
    std::string mode = "dispersion";  ///< constant | dispersion
    Mat3 tensor = identity3();
    DispersionParams dispersion;
    Vec3 velocity{1, 1, 1};
    std::filesystem::path velocity_file;  ///< per-cell "vx vy vz" lines
    double source = 0;
};

/// Named solver variant: tron1/2/3 fix inner_rtol to 1e-1/1e-2/1e-3.
struct SolverSpec {
    std::string name = "galerkin";
    SolverChoice choice = SolverChoice::galerkin;
    double rtol = 1e-6;
    double inner_rtol = 1e-1;
    std::size_t max_iter = 0;
    PreconditionerKind preconditioner = PreconditionerKind::ilu0;
};

struct OutputSpec {
    std::filesystem::path vtk;
    std::filesystem::path report;
    std::filesystem::path csv;
    std::size_t cadence = 0;  ///< transient VTK snapshot every `cadence` steps; 0 = final only
};

struct RunConfig {
    std::string name;
    MeshSpec mesh;
    PhysicsSpec physics;
    std::map<int, double> dirichlet;
    std::map<int, double> neumann;
    SolverSpec solver;
    std::optional<double> dt;
    std::size_t n_steps = 0;
    double initial_value = 1e-8;
    std::optional<Bounds> bounds;
    PerfEnvelope envelope = PerfEnvelope::mustang_single_core();
    OutputSpec output;
    std::vector<std::string> compare;
    std::size_t threads = 1;
};

/// Resolves "galerkin", "tron", "tron1".."tron3", "blmvm"; keeps `rtol` etc.
void apply_solver_name(SolverSpec& spec, const std::string& name);

/// Validates the document against the schema; unknown sections or keys and
/// type mismatches throw ConfigError naming the line. Relative paths are
/// resolved against `base_dir`.
RunConfig config_from_toml(const TomlDocument& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

Mesh build_mesh(const MeshSpec& spec);
DiffusivityField build_diffusivity(const PhysicsSpec& spec, const Mesh& mesh);
BoundarySpec build_boundary(const RunConfig& config);
TransientConfig build_transient_config(const RunConfig& config);

}  // namespace nnd::app
