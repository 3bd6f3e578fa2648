#include <doctest.h>

#include <algorithm>
#include <map>

#include "nnd/error.hpp"
#include "nnd/mesh.hpp"

using namespace nnd;

namespace {

std::vector<Index> sorted(std::span<const Index> v) {
    std::vector<Index> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return s;
}

// Counts, for every boundary facet, the cells owning it, by scanning all faces.
std::vector<int> face_census(const Mesh& mesh) {
    std::vector<int> owners(mesh.num_facets(), 0);
    const auto faces = cell_faces(mesh.kind());
    const int nf = vertices_per_facet(mesh.kind());
    for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
        const auto target = sorted(mesh.facet(f));
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            const auto cell = mesh.cell(c);
            for (const auto& lf : faces) {
                std::vector<Index> v;
                for (int a = 0; a < nf; ++a) v.push_back(cell[lf[a]]);
                std::sort(v.begin(), v.end());
                if (v == target) ++owners[f];
            }
        }
    }
    return owners;
}

// Faces used once over all cells: the true boundary, independent of the mesh's own list.
std::size_t unshared_faces(const Mesh& mesh) {
    std::map<std::vector<Index>, int> count;
    const int nf = vertices_per_facet(mesh.kind());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
        for (const auto& lf : cell_faces(mesh.kind())) {
            std::vector<Index> v;
            for (int a = 0; a < nf; ++a) v.push_back(mesh.cell(c)[lf[a]]);
            std::sort(v.begin(), v.end());
            ++count[v];
        }
    return static_cast<std::size_t>(std::count_if(count.begin(), count.end(), [](auto& p) { return p.second == 1; }));
}

}  // namespace

TEST_CASE("generate_box counts") {
    auto h = generate_box(1, 1, 1, ElementKind::hex8);
    CHECK(h.num_cells() == 1);
    CHECK(h.num_vertices() == 8);
    CHECK(h.num_facets() == 6);

    auto t = generate_box(1, 1, 1, ElementKind::tet4);
    CHECK(t.num_cells() == 6);
    CHECK(t.num_vertices() == 8);
    CHECK(t.num_facets() == 12);

    auto h2 = generate_box(2, 2, 2, ElementKind::hex8);
    CHECK(h2.num_cells() == 8);
    CHECK(h2.num_vertices() == 27);
    CHECK(h2.num_facets() == 24);

    for (const auto& f : t.facets()) CHECK(f.marker == kOuterMarker);
}

TEST_CASE("generate_box rejects non-positive divisions") {
    CHECK_THROWS_AS(generate_box(0, 1, 1, ElementKind::hex8), InvalidArgument);
    CHECK_THROWS_AS(generate_box(1, -2, 1, ElementKind::tet4), InvalidArgument);
}

TEST_CASE("generate_cube_with_hole counts and markers") {
    CHECK(generate_cube_with_hole(9, ElementKind::hex8).num_cells() == 728);
    CHECK(generate_cube_with_hole(9, ElementKind::tet4).num_cells() == 4368);
    CHECK(generate_cube_with_hole(18, ElementKind::hex8).num_cells() == 5824);
    CHECK_THROWS_AS(generate_cube_with_hole(10, ElementKind::hex8), InvalidArgument);
    CHECK_THROWS_AS(generate_cube_with_hole(0, ElementKind::hex8), InvalidArgument);

    auto m = generate_cube_with_hole(9, ElementKind::hex8);
    CHECK(m.markers() == std::vector<int>{kOuterMarker, kHoleMarker});
    std::size_t hole = 0;
    for (const auto& f : m.facets()) hole += f.marker == kHoleMarker;
    CHECK(hole == 6);
    CHECK(m.marked_vertices(kHoleMarker).size() == 8);
    for (Index v : m.marked_vertices(kHoleMarker))
        for (double x : m.vertices()[v]) CHECK((x == doctest::Approx(4.0 / 9) || x == doctest::Approx(5.0 / 9)));
}

TEST_CASE("volume identities") {
    for (auto kind : {ElementKind::tet4, ElementKind::hex8}) {
        CHECK(std::abs(total_volume(generate_box(3, 2, 4, kind)) - 1.0) <= 1e-12);
        CHECK(std::abs(total_volume(generate_cube_with_hole(9, kind)) - (1.0 - 1.0 / 729)) <= 1e-12);
        CHECK(std::abs(total_volume(generate_cube_with_hole(18, kind)) - (1.0 - 1.0 / 729)) <= 1e-12);
    }
}

TEST_CASE("every cell is positively oriented") {
    for (auto kind : {ElementKind::tet4, ElementKind::hex8}) {
        auto m = generate_cube_with_hole(9, kind);
        for (std::size_t c = 0; c < m.num_cells(); ++c) REQUIRE(cell_volume(m, c) > 0);
        CHECK_NOTHROW(m.validate());
    }
}

TEST_CASE("refine_uniform") {
    auto t = generate_box(1, 1, 1, ElementKind::tet4);
    auto t1 = refine_uniform(t);
    CHECK(t1.num_cells() == 48);
    CHECK(t1.num_facets() == 48);
    CHECK(refine_uniform(t1).num_cells() == 6 * 64);
    CHECK(std::abs(total_volume(t1) - 1.0) <= 1e-12);
    CHECK_NOTHROW(t1.validate());

    auto h1 = refine_uniform(generate_box(1, 1, 1, ElementKind::hex8));
    CHECK(h1.num_cells() == 8);
    CHECK(h1.num_vertices() == 27);
    CHECK(h1.num_facets() == 24);

    auto hole = generate_cube_with_hole(9, ElementKind::tet4);
    auto r = refine_uniform(hole);
    CHECK(r.num_cells() == 8 * hole.num_cells());
    CHECK(std::abs(total_volume(r) - total_volume(hole)) <= 1e-12);
    CHECK(r.markers() == hole.markers());
    std::size_t hole_facets = 0, refined_hole_facets = 0;
    for (const auto& f : hole.facets()) hole_facets += f.marker == kHoleMarker;
    for (const auto& f : r.facets()) refined_hole_facets += f.marker == kHoleMarker;
    CHECK(refined_hole_facets == 4 * hole_facets);
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("boundary facets pass a brute-force face census") {
    std::vector<Mesh> meshes;
    meshes.push_back(generate_box(2, 3, 2, ElementKind::tet4));
    meshes.push_back(generate_box(2, 2, 3, ElementKind::hex8));
    meshes.push_back(generate_cube_with_hole(9, ElementKind::tet4));
    meshes.push_back(refine_uniform(generate_box(2, 1, 1, ElementKind::tet4)));
    meshes.push_back(refine_uniform(generate_box(1, 2, 1, ElementKind::hex8)));
    for (const auto& m : meshes) {
        REQUIRE(m.num_cells() <= 10000);
        for (int owners : face_census(m)) CHECK(owners == 1);
        CHECK(unshared_faces(m) == m.num_facets());
    }
}

TEST_CASE("boundary facets have outward normals") {
    auto m = generate_cube_with_hole(9, ElementKind::tet4);
    const Vec3 centre{0.5, 0.5, 0.5};
    for (std::size_t f = 0; f < m.num_facets(); ++f) {
        const auto v = m.facet(f);
        const auto& x = m.vertices();
        const Vec3 n = cross(x[v[1]] - x[v[0]], x[v[2]] - x[v[0]]);
        const Vec3 mid = (1.0 / 3) * (x[v[0]] + x[v[1]] + x[v[2]]);
        const double s = dot(n, mid - centre);
        if (m.facets()[f].marker == kOuterMarker)
            CHECK(s > 0);
        else
            CHECK(s < 0);
    }
}

TEST_CASE("Mesh::validate rejects broken meshes") {
    std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK_NOTHROW(Mesh(ElementKind::tet4, v, {0, 1, 2, 3}, {}).validate());
    CHECK_THROWS_AS(Mesh(ElementKind::tet4, v, {0, 2, 1, 3}, {}).validate(), InvalidArgument);
    CHECK_THROWS_AS(Mesh(ElementKind::tet4, v, {0, 1, 2, 7}, {}).validate(), InvalidArgument);
    BoundaryFacet stray;
    stray.v = {0, 1, 3, -1};
    stray.marker = 1;
    CHECK_NOTHROW(Mesh(ElementKind::tet4, v, {0, 1, 2, 3}, {stray}).validate());
    BoundaryFacet bogus;
    bogus.v = {0, 1, 1, -1};
    bogus.marker = 1;
    CHECK_THROWS_AS(Mesh(ElementKind::tet4, v, {0, 1, 2, 3}, {bogus}).validate(), InvalidArgument);
}
