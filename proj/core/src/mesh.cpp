#include "nnd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "nnd/error.hpp"

namespace nnd {

namespace {

constexpr std::array<std::array<int, 4>, 4> kTetFaces{{
    {0, 2, 1, -1}, {0, 1, 3, -1}, {1, 2, 3, -1}, {0, 3, 2, -1}}};

constexpr std::array<std::array<int, 4>, 6> kHexFaces{{
    {0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}}};

// VTK hex corner index for unit-cube corner (a, b, c).
constexpr int hex_corner(int a, int b, int c) {
    constexpr int lut[2][2] = {{0, 3}, {1, 2}};
    return lut[a][b] + 4 * c;
}

using FaceKey = std::array<Index, 4>;

FaceKey face_key(std::span<const Index> verts) {
    FaceKey key{-1, -1, -1, -1};
    std::copy(verts.begin(), verts.end(), key.begin());
    std::sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(verts.size()));
    return key;
}

struct FaceKeyHash {
    std::size_t operator()(const FaceKey& k) const noexcept {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (Index v : k) {
            h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v));
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

using FaceCensus = std::unordered_map<FaceKey, int, FaceKeyHash>;

FaceCensus census(const Mesh& mesh) {
    FaceCensus counts;
    counts.reserve(mesh.num_cells() * facets_per_cell(mesh.kind()));
    const int nf = vertices_per_facet(mesh.kind());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        auto cell = mesh.cell(c);
        for (const auto& face : cell_faces(mesh.kind())) {
            std::array<Index, 4> verts{-1, -1, -1, -1};
            for (int i = 0; i < nf; ++i) verts[i] = cell[face[i]];
            ++counts[face_key(std::span<const Index>(verts.data(), nf))];
        }
    }
    return counts;
}

// Boundary facets are cell faces seen exactly once; emitted in cell order.
template <typename MarkerFn>
std::vector<BoundaryFacet> extract_boundary(ElementKind kind, const std::vector<Vec3>& vertices,
                                            const std::vector<Index>& conn, MarkerFn marker_of) {
    Mesh tmp(kind, vertices, conn, {});
    const FaceCensus counts = census(tmp);
    const int nf = vertices_per_facet(kind);
    std::vector<BoundaryFacet> facets;
    for (std::size_t c = 0; c < tmp.num_cells(); ++c) {
        auto cell = tmp.cell(c);
        for (const auto& face : cell_faces(kind)) {
            BoundaryFacet f;
            for (int i = 0; i < nf; ++i) f.v[i] = cell[face[i]];
            if (counts.at(face_key(std::span<const Index>(f.v.data(), nf))) != 1) continue;
            f.marker = marker_of(std::span<const Index>(f.v.data(), nf));
            facets.push_back(f);
        }
    }
    return facets;
}

bool on_unit_cube_boundary(const std::vector<Vec3>& vertices, std::span<const Index> facet) {
    for (int axis = 0; axis < 3; ++axis) {
        for (double plane : {0.0, 1.0}) {
            bool all = true;
            for (Index v : facet) all = all && vertices[v][axis] == plane;
            if (all) return true;
        }
    }
    return false;
}

// Six Kuhn tets per hex, all sharing the (1,0,0)-(0,1,1) diagonal. Conforming
// across neighbouring hexes because every hex uses the same split.
void append_kuhn_tets(const std::array<Index, 8>& hex, const std::vector<Vec3>& vertices,
                      std::vector<Index>& conn) {
    std::array<int, 3> perm{0, 1, 2};
    do {
        std::array<int, 3> at{1, 0, 0};
        std::array<Index, 4> tet{};
        tet[0] = hex[hex_corner(at[0], at[1], at[2])];
        for (int s = 0; s < 3; ++s) {
            at[perm[s]] ^= 1;
            tet[s + 1] = hex[hex_corner(at[0], at[1], at[2])];
        }
        if (triple(vertices[tet[0]], vertices[tet[1]], vertices[tet[2]], vertices[tet[3]]) < 0)
            std::swap(tet[1], tet[2]);
        conn.insert(conn.end(), tet.begin(), tet.end());
    } while (std::next_permutation(perm.begin(), perm.end()));
}

// Structured n-cell lattice of the unit cube; cells for which `keep` is false
// are dropped and unreferenced vertices compacted away.
template <typename KeepFn>
Mesh structured(int nx, int ny, int nz, ElementKind kind, KeepFn keep) {
    auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    const std::size_t nv_full = static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1);

    std::vector<Index> remap(nv_full, -1);
    std::vector<std::array<int, 3>> hexes;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                if (keep(i, j, k)) hexes.push_back({i, j, k});

    for (const auto& h : hexes)
        for (int c = 0; c < 2; ++c)
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a) remap[vid(h[0] + a, h[1] + b, h[2] + c)] = 0;

    std::vector<Vec3> vertices;
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                auto& r = remap[vid(i, j, k)];
                if (r < 0) continue;
                r = static_cast<Index>(vertices.size());
                vertices.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny,
                                    static_cast<double>(k) / nz});
            }

    std::vector<Index> conn;
    for (const auto& h : hexes) {
        std::array<Index, 8> hex{};
        for (int c = 0; c < 2; ++c)
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a)
                    hex[hex_corner(a, b, c)] = remap[vid(h[0] + a, h[1] + b, h[2] + c)];
        if (kind == ElementKind::hex8)
            conn.insert(conn.end(), hex.begin(), hex.end());
        else
            append_kuhn_tets(hex, vertices, conn);
    }

    auto facets = extract_boundary(kind, vertices, conn, [&](std::span<const Index> f) {
        return on_unit_cube_boundary(vertices, f) ? kOuterMarker : kHoleMarker;
    });
    return Mesh(kind, std::move(vertices), std::move(conn), std::move(facets));
}

}  // namespace

std::string_view to_string(ElementKind kind) { return kind == ElementKind::tet4 ? "tet4" : "hex8"; }

ElementKind element_kind_from_string(std::string_view name) {
    if (name == "tet4") return ElementKind::tet4;
    if (name == "hex8") return ElementKind::hex8;
    throw InvalidArgument("unknown element kind '" + std::string(name) + "' (expected tet4 or hex8)");
}

std::span<const std::array<int, 4>> cell_faces(ElementKind kind) {
    if (kind == ElementKind::tet4) return kTetFaces;
    return kHexFaces;
}

Mesh::Mesh(ElementKind kind, std::vector<Vec3> vertices, std::vector<Index> connectivity,
           std::vector<BoundaryFacet> facets)
    : kind_(kind),
      vertices_(std::move(vertices)),
      connectivity_(std::move(connectivity)),
      facets_(std::move(facets)) {
    if (connectivity_.size() % vertices_per_cell(kind_) != 0)
        throw InvalidArgument("connectivity length is not a multiple of the cell size");
}

std::vector<int> Mesh::markers() const {
    std::vector<int> out;
    for (const auto& f : facets_) out.push_back(f.marker);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Index> Mesh::marked_vertices(int marker) const {
    std::vector<Index> out;
    const int nf = vertices_per_facet(kind_);
    for (const auto& f : facets_)
        if (f.marker == marker) out.insert(out.end(), f.v.begin(), f.v.begin() + nf);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void Mesh::validate() const {
    const auto nv = static_cast<Index>(vertices_.size());
    for (Index v : connectivity_)
        if (v < 0 || v >= nv) throw InvalidArgument("cell vertex index " + std::to_string(v) + " out of range");
    const int nf = vertices_per_facet(kind_);
    for (const auto& f : facets_)
        for (int i = 0; i < nf; ++i)
            if (f.v[i] < 0 || f.v[i] >= nv)
                throw InvalidArgument("facet vertex index " + std::to_string(f.v[i]) + " out of range");
    for (std::size_t c = 0; c < num_cells(); ++c)
        if (!(cell_volume(*this, c) > 0))
            throw InvalidArgument("cell " + std::to_string(c) + " has non-positive volume");
    const FaceCensus counts = census(*this);
    for (std::size_t i = 0; i < facets_.size(); ++i) {
        auto it = counts.find(face_key(facet(i)));
        if (it == counts.end() || it->second != 1)
            throw InvalidArgument("boundary facet " + std::to_string(i) + " is not a face of exactly one cell");
    }
}

double signed_volume(ElementKind kind, std::span<const Vec3> x) {
    if (kind == ElementKind::tet4) return triple(x[0], x[1], x[2], x[3]) / 6.0;

    static constexpr std::array<std::array<int, 3>, 8> ref{{
        {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
        {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}}};
    const double g = 1.0 / std::sqrt(3.0);
    double vol = 0;
    for (double xi : {-g, g})
        for (double eta : {-g, g})
            for (double zeta : {-g, g}) {
                Mat3 jac{};
                for (int a = 0; a < 8; ++a) {
                    const double r = ref[a][0], s = ref[a][1], t = ref[a][2];
                    const Vec3 dn{0.125 * r * (1 + s * eta) * (1 + t * zeta),
                                  0.125 * s * (1 + r * xi) * (1 + t * zeta),
                                  0.125 * t * (1 + r * xi) * (1 + s * eta)};
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) jac[i][j] += x[a][i] * dn[j];
                }
                vol += det3(jac);
            }
    return vol;
}

double cell_volume(const Mesh& mesh, std::size_t c) {
    std::array<Vec3, 8> corners{};
    auto cell = mesh.cell(c);
    for (std::size_t i = 0; i < cell.size(); ++i) corners[i] = mesh.vertices()[cell[i]];
    return signed_volume(mesh.kind(), std::span<const Vec3>(corners.data(), cell.size()));
}

// Neumaier summation.
double total_volume(const Mesh& mesh) {
    double sum = 0, comp = 0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double v = cell_volume(mesh, c);
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

Mesh generate_box(int nx, int ny, int nz, ElementKind kind) {
    if (nx < 1 || ny < 1 || nz < 1) throw InvalidArgument("generate_box: divisions must be >= 1");
    return structured(nx, ny, nz, kind, [](int, int, int) { return true; });
}

Mesh generate_cube_with_hole(int n, ElementKind kind) {
    if (n < 9 || n % 9 != 0)
        throw InvalidArgument("generate_cube_with_hole: n must be a positive multiple of 9, got " + std::to_string(n));
    const int lo = 4 * n / 9, hi = 5 * n / 9;
    auto in_hole = [&](int i) { return i >= lo && i < hi; };
    return structured(n, n, n, kind, [&](int i, int j, int k) { return !(in_hole(i) && in_hole(j) && in_hole(k)); });
}

Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Vec3> vertices = mesh.vertices();
    std::map<std::vector<Index>, Index> created;

    // New vertex at the centroid of the given parent vertices, shared by key.
    auto centroid_of = [&](std::vector<Index> parents) {
        std::sort(parents.begin(), parents.end());
        auto [it, inserted] = created.try_emplace(parents, static_cast<Index>(vertices.size()));
        if (inserted) {
            Vec3 p{0, 0, 0};
            for (Index v : parents) p = p + mesh.vertices()[v];
            vertices.push_back((1.0 / static_cast<double>(parents.size())) * p);
        }
        return it->second;
    };
    auto mid = [&](Index a, Index b) { return centroid_of({a, b}); };

    std::vector<Index> conn;
    std::vector<BoundaryFacet> facets;
    conn.reserve(mesh.connectivity().size() * 8);

    if (mesh.kind() == ElementKind::tet4) {
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            auto t = mesh.cell(c);
            const Index a0 = t[0], a1 = t[1], a2 = t[2], a3 = t[3];
            const Index m01 = mid(a0, a1), m02 = mid(a0, a2), m03 = mid(a0, a3);
            const Index m12 = mid(a1, a2), m13 = mid(a1, a3), m23 = mid(a2, a3);
            std::vector<std::array<Index, 4>> kids{
                {a0, m01, m02, m03}, {m01, a1, m12, m13}, {m02, m12, a2, m23}, {m03, m13, m23, a3}};

            // Interior octahedron split along its shortest diagonal.
            struct Split {
                Index p, q;
                std::array<Index, 4> ring;
            };
            const std::array<Split, 3> splits{{{m01, m23, {m02, m03, m13, m12}},
                                               {m02, m13, {m01, m03, m23, m12}},
                                               {m03, m12, {m01, m02, m23, m13}}}};
            std::size_t best = 0;
            double best_len = norm(vertices[splits[0].p] - vertices[splits[0].q]);
            for (std::size_t s = 1; s < 3; ++s) {
                const double len = norm(vertices[splits[s].p] - vertices[splits[s].q]);
                if (len < best_len * (1 - 1e-12)) best = s, best_len = len;
            }
            const Split& sp = splits[best];
            for (int i = 0; i < 4; ++i) kids.push_back({sp.p, sp.q, sp.ring[i], sp.ring[(i + 1) % 4]});

            for (auto& k : kids) {
                if (triple(vertices[k[0]], vertices[k[1]], vertices[k[2]], vertices[k[3]]) < 0) std::swap(k[2], k[3]);
                conn.insert(conn.end(), k.begin(), k.end());
            }
        }
        for (const auto& f : mesh.facets()) {
            const Index a = f.v[0], b = f.v[1], c = f.v[2];
            const Index ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
            for (const auto& tri : {std::array<Index, 3>{a, ab, ca}, std::array<Index, 3>{ab, b, bc},
                                    std::array<Index, 3>{ca, bc, c}, std::array<Index, 3>{ab, bc, ca}})
                facets.push_back({{tri[0], tri[1], tri[2], -1}, f.marker});
        }
    } else {
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            auto h = mesh.cell(c);
            // Lattice point (i,j,k) in {0,1,2}^3 is the centroid of the corners
            // spanned by the axes where the coordinate equals 1.
            std::array<Index, 27> lattice{};
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 3; ++j)
                    for (int i = 0; i < 3; ++i) {
                        std::vector<Index> parents;
                        for (int cz = 0; cz < 2; ++cz) {
                            if ((k == 0 && cz == 1) || (k == 2 && cz == 0)) continue;
                            for (int cy = 0; cy < 2; ++cy) {
                                if ((j == 0 && cy == 1) || (j == 2 && cy == 0)) continue;
                                for (int cx = 0; cx < 2; ++cx) {
                                    if ((i == 0 && cx == 1) || (i == 2 && cx == 0)) continue;
                                    parents.push_back(h[hex_corner(cx, cy, cz)]);
                                }
                            }
                        }
                        lattice[(k * 3 + j) * 3 + i] = parents.size() == 1 ? parents[0] : centroid_of(parents);
                    }
            for (int K = 0; K < 2; ++K)
                for (int J = 0; J < 2; ++J)
                    for (int I = 0; I < 2; ++I) {
                        std::array<Index, 8> kid{};
                        for (int cz = 0; cz < 2; ++cz)
                            for (int cy = 0; cy < 2; ++cy)
                                for (int cx = 0; cx < 2; ++cx)
                                    kid[hex_corner(cx, cy, cz)] = lattice[((K + cz) * 3 + J + cy) * 3 + I + cx];
                        conn.insert(conn.end(), kid.begin(), kid.end());
                    }
        }
        for (const auto& f : mesh.facets()) {
            const Index a = f.v[0], b = f.v[1], c = f.v[2], d = f.v[3];
            const Index ab = mid(a, b), bc = mid(b, c), cd = mid(c, d), da = mid(d, a);
            const Index m = centroid_of({a, b, c, d});
            facets.push_back({{a, ab, m, da}, f.marker});
            facets.push_back({{ab, b, bc, m}, f.marker});
            facets.push_back({{m, bc, c, cd}, f.marker});
            facets.push_back({{da, m, cd, d}, f.marker});
        }
    }
    return Mesh(mesh.kind(), std::move(vertices), std::move(conn), std::move(facets));
}

}  // namespace nnd
