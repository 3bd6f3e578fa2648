#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nnd/geometry.hpp"

namespace nnd {

using Index = std::int32_t;

enum class ElementKind { tet4, hex8 };

std::string_view to_string(ElementKind kind);
ElementKind element_kind_from_string(std::string_view name);

constexpr int vertices_per_cell(ElementKind kind) { return kind == ElementKind::tet4 ? 4 : 8; }
constexpr int vertices_per_facet(ElementKind kind) { return kind == ElementKind::tet4 ? 3 : 4; }
constexpr int facets_per_cell(ElementKind kind) { return kind == ElementKind::tet4 ? 4 : 6; }

/// Marker attached to the outer boundary of generated meshes.
inline constexpr int kOuterMarker = 1;
/// Marker attached to the hole boundary of generate_cube_with_hole.
inline constexpr int kHoleMarker = 2;

/// Boundary triangle (tet meshes) or quadrilateral (hex meshes), oriented
/// with an outward normal. Unused trailing slots hold -1.
struct BoundaryFacet {
    std::array<Index, 4> v{-1, -1, -1, -1};
    int marker = 0;
};

/// Unstructured single-kind mesh in VTK vertex ordering.
///
/// Tets are positively oriented: (v1-v0).((v2-v0)x(v3-v0)) > 0. Hexes list the
/// bottom quad counter-clockwise followed by the top quad.
class Mesh {
public:
    Mesh() = default;
    Mesh(ElementKind kind, std::vector<Vec3> vertices, std::vector<Index> connectivity,
         std::vector<BoundaryFacet> facets);

    ElementKind kind() const noexcept { return kind_; }
    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_cells() const noexcept { return connectivity_.size() / vertices_per_cell(kind_); }
    std::size_t num_facets() const noexcept { return facets_.size(); }

    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<Index>& connectivity() const noexcept { return connectivity_; }
    const std::vector<BoundaryFacet>& facets() const noexcept { return facets_; }

    std::span<const Index> cell(std::size_t c) const {
        const auto n = static_cast<std::size_t>(vertices_per_cell(kind_));
        return std::span<const Index>(connectivity_).subspan(c * n, n);
    }
    std::span<const Index> facet(std::size_t f) const {
        return std::span<const Index>(facets_[f].v.data(), vertices_per_facet(kind_));
    }

    /// Sorted, unique list of markers used by boundary facets.
    std::vector<int> markers() const;

    /// Vertex indices touching a facet with the given marker (sorted, unique).
    std::vector<Index> marked_vertices(int marker) const;

    /// Throws InvalidArgument if any structural invariant fails.
    void validate() const;

private:
    ElementKind kind_ = ElementKind::tet4;
    std::vector<Vec3> vertices_;
    std::vector<Index> connectivity_;
    std::vector<BoundaryFacet> facets_;
};

/// Local vertex lists of each cell face, outward for canonically ordered cells.
std::span<const std::array<int, 4>> cell_faces(ElementKind kind);

/// Signed volume of a cell given its corner coordinates in canonical order.
/// Hexes are integrated with 2x2x2 Gauss on the trilinear map.
double signed_volume(ElementKind kind, std::span<const Vec3> corners);
double cell_volume(const Mesh& mesh, std::size_t cell);
double total_volume(const Mesh& mesh);

/// Structured mesh of the unit cube with nx*ny*nz hexes, each split into six
/// tets for tet4. All boundary facets carry kOuterMarker.
Mesh generate_box(int nx, int ny, int nz, ElementKind kind);

/// Unit cube with the [4/9,5/9]^3 hole removed. n must be a positive multiple
/// of 9. Outer facets carry kOuterMarker, hole facets kHoleMarker.
Mesh generate_cube_with_hole(int n, ElementKind kind);

/// Octasection of tets, 2x2x2 subdivision of hexes; facet markers inherited.
Mesh refine_uniform(const Mesh& mesh);

}  // namespace nnd
