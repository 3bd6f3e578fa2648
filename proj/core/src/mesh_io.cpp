#include "nnd/mesh_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "nnd/error.hpp"

namespace nnd {

namespace {

class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    }

    std::string require(const char* context) {
        std::string line;
        if (!next(line)) fail(std::string("unexpected end of file in ") + context);
        return line;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

    std::size_t line_no() const noexcept { return line_no_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

struct RawFacet {
    std::vector<Index> v;
    int marker;
    std::size_t line;
};

double corner_volume(ElementKind kind, const std::vector<Vec3>& x, std::span<const Index> cell) {
    std::array<Vec3, 8> corners{};
    for (std::size_t i = 0; i < cell.size(); ++i) corners[i] = x[cell[i]];
    return signed_volume(kind, std::span<const Vec3>(corners.data(), cell.size()));
}

// Reorder an inverted cell into canonical orientation.
void orient_cell(ElementKind kind, const std::vector<Vec3>& x, std::span<Index> cell, const LineReader& lr) {
    double vol = corner_volume(kind, x, cell);
    if (vol < 0) {
        if (kind == ElementKind::tet4) {
            std::swap(cell[1], cell[2]);
        } else {
            std::swap(cell[1], cell[3]);
            std::swap(cell[5], cell[7]);
        }
        vol = corner_volume(kind, x, cell);
    }
    if (!(vol > 0)) lr.fail("degenerate volume element");
}

}  // namespace

Mesh read_gmsh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_gmsh(in, path);
}

Mesh read_gmsh(std::istream& in, const std::string& source_name) {
    LineReader lr(in, source_name);
    std::string line;
    bool saw_format = false;
    std::unordered_map<long, Index> node_index;
    std::vector<Vec3> vertices;
    std::optional<ElementKind> kind;
    std::vector<Index> conn;
    std::vector<RawFacet> raw_facets;

    while (lr.next(line)) {
        std::istringstream head(line);
        std::string section;
        head >> section;
        if (section == "$MeshFormat") {
            std::istringstream ss(lr.require("$MeshFormat"));
            double version = 0;
            int file_type = -1, data_size = 0;
            if (!(ss >> version >> file_type >> data_size)) lr.fail("malformed $MeshFormat line");
            if (version < 2.0 || version >= 3.0) lr.fail("unsupported MSH version (need 2.x)");
            if (file_type != 0) lr.fail("binary MSH files are not supported");
            if (lr.require("$MeshFormat") != "$EndMeshFormat") lr.fail("expected $EndMeshFormat");
            saw_format = true;
        } else if (section == "$Nodes") {
            if (!saw_format) lr.fail("$Nodes before $MeshFormat");
            std::istringstream cs(lr.require("$Nodes"));
            long count = -1;
            if (!(cs >> count) || count < 0) lr.fail("malformed node count");
            vertices.reserve(static_cast<std::size_t>(count));
            for (long i = 0; i < count; ++i) {
                std::istringstream ss(lr.require("$Nodes"));
                long id;
                Vec3 p;
                if (!(ss >> id >> p[0] >> p[1] >> p[2])) lr.fail("malformed node line");
                if (!node_index.emplace(id, static_cast<Index>(vertices.size())).second)
                    lr.fail("duplicate node id " + std::to_string(id));
                vertices.push_back(p);
            }
            if (lr.require("$Nodes") != "$EndNodes") lr.fail("expected $EndNodes");
        } else if (section == "$Elements") {
            if (!saw_format) lr.fail("$Elements before $MeshFormat");
            std::istringstream cs(lr.require("$Elements"));
            long count = -1;
            if (!(cs >> count) || count < 0) lr.fail("malformed element count");
            for (long e = 0; e < count; ++e) {
                std::istringstream ss(lr.require("$Elements"));
                long id;
                int type, ntags;
                if (!(ss >> id >> type >> ntags) || ntags < 0) lr.fail("malformed element header");
                std::vector<long> tags(static_cast<std::size_t>(ntags));
                for (auto& t : tags)
                    if (!(ss >> t)) lr.fail("missing element tag");
                int nn;
                switch (type) {
                    case 15: nn = 1; break;
                    case 1: nn = 2; break;
                    case 2: nn = 3; break;
                    case 3: nn = 4; break;
                    case 4: nn = 4; break;
                    case 5: nn = 8; break;
                    default: lr.fail("unsupported element type " + std::to_string(type));
                }
                std::vector<Index> nodes(static_cast<std::size_t>(nn));
                for (auto& n : nodes) {
                    long nid;
                    if (!(ss >> nid)) lr.fail("missing element node");
                    auto it = node_index.find(nid);
                    if (it == node_index.end()) lr.fail("element references unknown node " + std::to_string(nid));
                    n = it->second;
                }
                std::string extra;
                if (ss >> extra) lr.fail("trailing data on element line");

                if (type == 4 || type == 5) {
                    const ElementKind k = type == 4 ? ElementKind::tet4 : ElementKind::hex8;
                    if (kind && *kind != k) lr.fail("mixed volumetric element kinds");
                    kind = k;
                    orient_cell(k, vertices, nodes, lr);
                    conn.insert(conn.end(), nodes.begin(), nodes.end());
                } else if (type == 2 || type == 3) {
                    const int marker = tags.empty() ? 0 : static_cast<int>(tags[0]);
                    raw_facets.push_back({std::move(nodes), marker, lr.line_no()});
                }
            }
            if (lr.require("$Elements") != "$EndElements") lr.fail("expected $EndElements");
        } else if (!section.empty() && section[0] == '$') {
            const std::string end = "$End" + section.substr(1);
            while (true) {
                if (lr.require(section.c_str()) == end) break;
            }
        } else {
            lr.fail("unexpected content outside a section: '" + line + "'");
        }
    }

    if (!saw_format) lr.fail("missing $MeshFormat");
    if (!kind) lr.fail("no tet4 or hex8 volume elements");

    // Match each facet to the unique cell face it lies on and adopt that face's
    // outward ordering.
    Mesh cells_only(*kind, vertices, conn, {});
    const int nf = vertices_per_facet(*kind);
    std::map<std::vector<Index>, std::pair<int, std::array<Index, 4>>> faces;
    for (std::size_t c = 0; c < cells_only.num_cells(); ++c) {
        auto cell = cells_only.cell(c);
        for (const auto& face : cell_faces(*kind)) {
            std::array<Index, 4> ordered{-1, -1, -1, -1};
            for (int i = 0; i < nf; ++i) ordered[i] = cell[face[i]];
            std::vector<Index> key(ordered.begin(), ordered.begin() + nf);
            std::sort(key.begin(), key.end());
            auto& slot = faces[key];
            ++slot.first;
            slot.second = ordered;
        }
    }
    std::vector<BoundaryFacet> facets;
    for (const auto& rf : raw_facets) {
        if (static_cast<int>(rf.v.size()) != nf)
            throw ParseError(source_name, rf.line, "boundary element does not match volume element kind");
        std::vector<Index> key = rf.v;
        std::sort(key.begin(), key.end());
        auto it = faces.find(key);
        if (it == faces.end() || it->second.first != 1)
            throw ParseError(source_name, rf.line, "boundary element is not a face of exactly one cell");
        facets.push_back({it->second.second, rf.marker});
    }
    return Mesh(*kind, std::move(vertices), std::move(conn), std::move(facets));
}

void write_gmsh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_gmsh(mesh, out);
}

void write_gmsh(const Mesh& mesh, std::ostream& out) {
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    out << "$Nodes\n" << mesh.num_vertices() << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        const auto& p = mesh.vertices()[i];
        out << i + 1 << ' ' << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    }
    out << "$EndNodes\n$Elements\n" << mesh.num_facets() + mesh.num_cells() << "\n";
    const bool tet = mesh.kind() == ElementKind::tet4;
    std::size_t id = 1;
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        const int marker = mesh.facets()[f].marker;
        out << id++ << ' ' << (tet ? 2 : 3) << " 2 " << marker << ' ' << marker;
        for (Index v : mesh.facet(f)) out << ' ' << v + 1;
        out << '\n';
    }
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        out << id++ << ' ' << (tet ? 4 : 5) << " 2 0 0";
        for (Index v : mesh.cell(c)) out << ' ' << v + 1;
        out << '\n';
    }
    out << "$EndElements\n";
}

void write_vtk(const Mesh& mesh, std::span<const NodalField> fields, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_vtk(mesh, fields, out);
}

void write_vtk(const Mesh& mesh, std::span<const NodalField> fields, std::ostream& out) {
    for (const auto& f : fields)
        if (f.values.size() != mesh.num_vertices())
            throw DimensionError("field '" + f.name + "' length does not match vertex count");

    const int npc = vertices_per_cell(mesh.kind());
    out << "# vtk DataFile Version 3.0\n";
    out << "nnd diffusion solution\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << std::setprecision(17);
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices()) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    out << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (npc + 1) << '\n';
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        out << npc;
        for (Index v : mesh.cell(c)) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << mesh.num_cells() << '\n';
    const int type_id = mesh.kind() == ElementKind::tet4 ? 10 : 12;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) out << type_id << '\n';
    if (fields.empty()) return;
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& f : fields) {
        out << "SCALARS " << f.name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (double v : f.values) out << v << '\n';
    }
}

}  // namespace nnd
