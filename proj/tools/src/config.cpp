#include "nnd_app/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nnd/error.hpp"
#include "nnd/mesh_io.hpp"

namespace nnd::app {

namespace {

using Type = TomlValue::Type;

[[noreturn]] void bad(const TomlValue& v, const std::string& key, const std::string& what) {
    throw ConfigError("line " + std::to_string(v.line) + ": '" + key + "' " + what);
}

double as_number(const TomlValue& v, const std::string& key) {
    if (v.type != Type::number) bad(v, key, "must be a number");
    return v.number;
}

double as_finite(const TomlValue& v, const std::string& key) {
    const double x = as_number(v, key);
    if (!std::isfinite(x)) bad(v, key, "must be finite");
    return x;
}

long as_int(const TomlValue& v, const std::string& key, long min) {
    if (v.type != Type::number || !v.integer) bad(v, key, "must be an integer");
    if (v.number < static_cast<double>(min)) bad(v, key, "must be >= " + std::to_string(min));
    return static_cast<long>(v.number);
}

std::string as_string(const TomlValue& v, const std::string& key) {
    if (v.type != Type::string) bad(v, key, "must be a string");
    return v.text;
}

std::vector<double> as_numbers(const TomlValue& v, const std::string& key, std::size_t count) {
    if (v.type != Type::array) bad(v, key, "must be an array");
    if (v.items.size() != count) bad(v, key, "must have " + std::to_string(count) + " entries");
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(as_finite(item, key));
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void check_keys(const std::string& section, const TomlTable& table, const std::set<std::string>& allowed) {
    for (const auto& [key, v] : table.entries)
        if (!allowed.count(key))
            throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" + key + "' in [" + section + "]");
}

std::map<int, double> marker_table(const std::string& section, const TomlTable& table) {
    std::map<int, double> out;
    for (const auto& [key, v] : table.entries) {
        int marker = 0;
        auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), marker);
        if (ec != std::errc() || p != key.data() + key.size())
            throw ConfigError("line " + std::to_string(v.line) + ": [" + section + "] keys must be integer markers, got '" +
                              key + "'");
        out[marker] = as_finite(v, key);
    }
    return out;
}

}  // namespace

void apply_solver_name(SolverSpec& spec, const std::string& name) {
    if (name == "tron1" || name == "tron2" || name == "tron3") {
        spec.choice = SolverChoice::tron;
        spec.inner_rtol = name == "tron1" ? 1e-1 : (name == "tron2" ? 1e-2 : 1e-3);
    } else {
        spec.choice = solver_choice_from_string(name);
    }
    spec.name = name;
}

RunConfig config_from_toml(const TomlDocument& doc, const std::filesystem::path& base_dir) {
    static const std::set<std::string> sections = {"",          "mesh",      "physics", "dirichlet", "neumann", "solver",
                                                   "transient", "bounds",    "perf",    "output",    "compare", "run"};
    for (const auto& [name, table] : doc.sections)
        if (!sections.count(name))
            throw ConfigError("line " + std::to_string(table.line) + ": unknown section [" + name + "]");

    RunConfig cfg;
    auto section = [&](const std::string& name, const std::set<std::string>& keys) -> const TomlTable* {
        auto it = doc.sections.find(name);
        if (it == doc.sections.end()) return nullptr;
        check_keys(name, it->second, keys);
        return &it->second;
    };
    auto get = [](const TomlTable* t, const std::string& key) -> const TomlValue* {
        if (!t) return nullptr;
        auto it = t->entries.find(key);
        return it == t->entries.end() ? nullptr : &it->second;
    };

    if (const auto* t = section("", {"name"}))
        if (const auto* v = get(t, "name")) cfg.name = as_string(*v, "name");

    if (const auto* t = section("run", {"threads"}))
        if (const auto* v = get(t, "threads")) cfg.threads = static_cast<std::size_t>(as_int(*v, "threads", 1));

    const auto* mesh = section("mesh", {"generator", "n", "nx", "ny", "nz", "kind", "refine", "path"});
    if (!mesh) throw ConfigError("missing [mesh] section");
    if (const auto* v = get(mesh, "generator")) cfg.mesh.generator = as_string(*v, "generator");
    if (cfg.mesh.generator != "box" && cfg.mesh.generator != "cube_with_hole" && cfg.mesh.generator != "file")
        bad(*get(mesh, "generator"), "generator", "must be box, cube_with_hole or file");
    if (const auto* v = get(mesh, "n")) {
        cfg.mesh.n = static_cast<int>(as_int(*v, "n", 1));
        cfg.mesh.nx = cfg.mesh.ny = cfg.mesh.nz = cfg.mesh.n;
    }
    if (const auto* v = get(mesh, "nx")) cfg.mesh.nx = static_cast<int>(as_int(*v, "nx", 1));
    if (const auto* v = get(mesh, "ny")) cfg.mesh.ny = static_cast<int>(as_int(*v, "ny", 1));
    if (const auto* v = get(mesh, "nz")) cfg.mesh.nz = static_cast<int>(as_int(*v, "nz", 1));
    if (const auto* v = get(mesh, "kind")) {
        try {
            cfg.mesh.kind = element_kind_from_string(as_string(*v, "kind"));
        } catch (const InvalidArgument&) {
            bad(*v, "kind", "must be tet4 or hex8");
        }
    }
    if (const auto* v = get(mesh, "refine")) cfg.mesh.refine = static_cast<int>(as_int(*v, "refine", 0));
    if (const auto* v = get(mesh, "path")) cfg.mesh.path = resolve(base_dir, as_string(*v, "path"));
    if (cfg.mesh.generator == "file" && cfg.mesh.path.empty()) throw ConfigError("[mesh] generator 'file' needs path");
    if (cfg.mesh.generator == "cube_with_hole" && cfg.mesh.n % 9 != 0)
        throw ConfigError("[mesh] cube_with_hole needs n to be a multiple of 9");

    if (const auto* t = section("physics", {"mode", "tensor", "alpha_L", "alpha_T", "d_M", "velocity",
                                            "velocity_file", "source"})) {
        if (const auto* v = get(t, "mode")) cfg.physics.mode = as_string(*v, "mode");
        if (cfg.physics.mode != "constant" && cfg.physics.mode != "dispersion")
            bad(*get(t, "mode"), "mode", "must be constant or dispersion");
        if (const auto* v = get(t, "tensor")) {
            const auto d = as_numbers(*v, "tensor", 9);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) cfg.physics.tensor[i][j] = d[3 * i + j];
        }
        if (const auto* v = get(t, "alpha_L")) cfg.physics.dispersion.alpha_L = as_finite(*v, "alpha_L");
        if (const auto* v = get(t, "alpha_T")) cfg.physics.dispersion.alpha_T = as_finite(*v, "alpha_T");
        if (const auto* v = get(t, "d_M")) cfg.physics.dispersion.d_M = as_finite(*v, "d_M");
        if (const auto* v = get(t, "velocity")) {
            const auto d = as_numbers(*v, "velocity", 3);
            cfg.physics.velocity = {d[0], d[1], d[2]};
        }
        if (const auto* v = get(t, "velocity_file"))
            cfg.physics.velocity_file = resolve(base_dir, as_string(*v, "velocity_file"));
        if (const auto* v = get(t, "source")) cfg.physics.source = as_finite(*v, "source");
        if (cfg.physics.mode == "dispersion") {
            try {
                cfg.physics.dispersion.validate();
            } catch (const Error& e) {
                throw ConfigError(std::string("[physics] ") + e.what());
            }
        }
    }

    if (doc.has("dirichlet")) cfg.dirichlet = marker_table("dirichlet", doc.sections.at("dirichlet"));
    if (doc.has("neumann")) cfg.neumann = marker_table("neumann", doc.sections.at("neumann"));
    for (const auto& [marker, value] : cfg.neumann)
        if (cfg.dirichlet.count(marker))
            throw ConfigError("marker " + std::to_string(marker) + " has both a Dirichlet and a Neumann condition");
    if (cfg.dirichlet.empty()) throw ConfigError("at least one [dirichlet] marker is required");

    if (const auto* t = section("solver", {"choice", "rtol", "inner_rtol", "max_iter", "preconditioner"})) {
        if (const auto* v = get(t, "inner_rtol")) cfg.solver.inner_rtol = as_finite(*v, "inner_rtol");
        if (const auto* v = get(t, "choice")) {
            try {
                apply_solver_name(cfg.solver, as_string(*v, "choice"));
            } catch (const ConfigError&) {
                bad(*v, "choice", "must be galerkin, tron, tron1, tron2, tron3 or blmvm");
            }
        }
        if (const auto* v = get(t, "rtol")) cfg.solver.rtol = as_finite(*v, "rtol");
        if (const auto* v = get(t, "max_iter")) cfg.solver.max_iter = static_cast<std::size_t>(as_int(*v, "max_iter", 0));
        if (const auto* v = get(t, "preconditioner")) {
            try {
                cfg.solver.preconditioner = preconditioner_from_string(as_string(*v, "preconditioner"));
            } catch (const Error&) {
                bad(*v, "preconditioner", "must be none, jacobi, ilu0 or bjacobi");
            }
        }
        if (!(cfg.solver.rtol > 0 && cfg.solver.rtol < 1)) bad(*get(t, "rtol"), "rtol", "must lie in (0,1)");
        if (!(cfg.solver.inner_rtol > 0 && cfg.solver.inner_rtol < 1))
            throw ConfigError("[solver] inner_rtol must lie in (0,1)");
    }

    if (const auto* t = section("transient", {"dt", "n_steps", "initial_value"})) {
        const auto* dt = get(t, "dt");
        if (!dt) throw ConfigError("[transient] needs dt");
        cfg.dt = as_finite(*dt, "dt");
        if (!(*cfg.dt > 0)) bad(*dt, "dt", "must be positive");
        const auto* steps = get(t, "n_steps");
        if (!steps) throw ConfigError("[transient] needs n_steps");
        cfg.n_steps = static_cast<std::size_t>(as_int(*steps, "n_steps", 1));
        if (const auto* v = get(t, "initial_value")) cfg.initial_value = as_finite(*v, "initial_value");
    }

    if (const auto* t = section("bounds", {"c_min", "c_max"})) {
        Bounds b;
        if (const auto* v = get(t, "c_min")) b.c_min = as_number(*v, "c_min");
        if (const auto* v = get(t, "c_max")) b.c_max = as_number(*v, "c_max");
        if (!(b.c_min <= b.c_max)) throw ConfigError("[bounds] c_min exceeds c_max");
        cfg.bounds = b;
    }

    if (const auto* t = section("perf", {"tpp", "streams_bw"})) {
        if (const auto* v = get(t, "tpp")) cfg.envelope.tpp = as_finite(*v, "tpp");
        if (const auto* v = get(t, "streams_bw")) cfg.envelope.streams_bw = as_finite(*v, "streams_bw");
        try {
            cfg.envelope.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("[perf] ") + e.what());
        }
    }

    if (const auto* t = section("output", {"vtk", "report", "csv", "cadence"})) {
        if (const auto* v = get(t, "vtk")) cfg.output.vtk = resolve(base_dir, as_string(*v, "vtk"));
        if (const auto* v = get(t, "report")) cfg.output.report = resolve(base_dir, as_string(*v, "report"));
        if (const auto* v = get(t, "csv")) cfg.output.csv = resolve(base_dir, as_string(*v, "csv"));
        if (const auto* v = get(t, "cadence")) cfg.output.cadence = static_cast<std::size_t>(as_int(*v, "cadence", 0));
    }

    if (const auto* t = section("compare", {"solvers"})) {
        if (const auto* v = get(t, "solvers")) {
            if (v->type != Type::array) bad(*v, "solvers", "must be an array of solver names");
            for (const auto& item : v->items) {
                const auto name = as_string(item, "solvers");
                SolverSpec probe;
                try {
                    apply_solver_name(probe, name);
                } catch (const ConfigError&) {
                    bad(item, "solvers", "contains unknown solver '" + name + "'");
                }
                cfg.compare.push_back(name);
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    auto cfg = config_from_toml(read_toml(path.string()), path.parent_path());
    if (cfg.name.empty()) cfg.name = path.stem().string();
    return cfg;
}

Mesh build_mesh(const MeshSpec& spec) {
    Mesh mesh = [&] {
        if (spec.generator == "box") return generate_box(spec.nx, spec.ny, spec.nz, spec.kind);
        if (spec.generator == "cube_with_hole") return generate_cube_with_hole(spec.n, spec.kind);
        return read_gmsh(spec.path.string());
    }();
    for (int r = 0; r < spec.refine; ++r) mesh = refine_uniform(mesh);
    return mesh;
}

DiffusivityField build_diffusivity(const PhysicsSpec& spec, const Mesh& mesh) {
    if (spec.mode == "constant") return DiffusivityField::constant(spec.tensor);
    if (spec.velocity_file.empty()) return DiffusivityField::uniform_dispersion(spec.velocity, spec.dispersion);
    std::ifstream in(spec.velocity_file);
    if (!in) throw ConfigError("cannot open velocity file " + spec.velocity_file.string());
    std::vector<Vec3> v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Vec3 x;
        if (!(ls >> x[0])) continue;
        if (!(ls >> x[1] >> x[2])) throw ParseError(spec.velocity_file.string(), line_no, "expected 'vx vy vz'");
        v.push_back(x);
    }
    if (v.size() != mesh.num_cells())
        throw ConfigError("velocity file has " + std::to_string(v.size()) + " rows but the mesh has " +
                          std::to_string(mesh.num_cells()) + " cells");
    return DiffusivityField::cellwise_dispersion(v, spec.dispersion);
}

BoundarySpec build_boundary(const RunConfig& config) {
    BoundarySpec bc;
    for (const auto& [marker, value] : config.dirichlet) bc.dirichlet[marker] = constant_field(value);
    for (const auto& [marker, value] : config.neumann) bc.neumann[marker] = constant_field(value);
    return bc;
}

TransientConfig build_transient_config(const RunConfig& config) {
    TransientConfig t;
    if (config.dt) t.dt = *config.dt;
    t.n_steps = config.dt ? config.n_steps : 0;
    t.initial_value = config.initial_value;
    t.bounds = config.bounds;
    t.solver = config.solver.choice;
    t.rtol = config.solver.rtol;
    t.inner_rtol = config.solver.inner_rtol;
    t.max_iterations = config.solver.max_iter;
    t.preconditioner = config.solver.preconditioner;
    t.assembly.threads = config.threads;
    return t;
}

}  // namespace nnd::app
