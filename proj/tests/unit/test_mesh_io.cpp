#include <doctest.h>

#include <sstream>
#include <string>

#include "nnd/error.hpp"
#include "nnd/mesh_io.hpp"

using namespace nnd;

namespace {

const char* kSingleTet = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
2
1 4 2 7 1 1 2 3 4
2 2 2 3 1 1 2 4
$EndElements
)";

int parse_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_gmsh(in, "t.msh");
    } catch (const ParseError& e) {
        return static_cast<int>(e.line());
    }
    return -1;
}

}  // namespace

TEST_CASE("single tet MSH") {
    std::istringstream in(kSingleTet);
    auto m = read_gmsh(in);
    CHECK(m.num_cells() == 1);
    CHECK(m.num_vertices() == 4);
    REQUIRE(m.num_facets() == 1);
    CHECK(m.facets()[0].marker == 3);
    CHECK(cell_volume(m, 0) == doctest::Approx(1.0 / 6));
}

TEST_CASE("inverted cells are reoriented on read") {
    std::string text = kSingleTet;
    text.replace(text.find("1 4 2 7 1 1 2 3 4"), 17, "1 4 2 7 1 1 3 2 4");
    std::istringstream in(text);
    auto m = read_gmsh(in);
    CHECK(cell_volume(m, 0) > 0);
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("parse errors name the offending line") {
    std::string unsupported = kSingleTet;
    unsupported.replace(unsupported.find("1 4 2 7 1"), 9, "1 9 2 7 1");
    CHECK(parse_error_line(unsupported) == 13);

    std::string header = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
9
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
5 0 0 1
6 1 0 1
7 1 1 1
8 0 1 1
9 2 0 0
$EndNodes
$Elements
2
)";
    const std::string mixed = header + "1 5 2 1 1 1 2 3 4 5 6 7 8\n2 4 2 1 1 2 9 3 6\n$EndElements\n";
    CHECK(parse_error_line(mixed) == 19);

    const std::string bad_node = std::string(kSingleTet).replace(std::string(kSingleTet).find("3 0 1 0"), 7, "3 0 x 0");
    CHECK(parse_error_line(bad_node) == 8);

    std::string stray = kSingleTet;
    stray.replace(stray.find("2 2 2 3 1 1 2 4"), 15, "2 2 2 3 1 1 2 9");
    CHECK(parse_error_line(stray) == 14);

    CHECK(parse_error_line("garbage\n") == 1);
}

TEST_CASE("gmsh round trip preserves the mesh") {
    for (auto kind : {ElementKind::tet4, ElementKind::hex8}) {
        auto m = generate_box(2, 2, 2, kind);
        std::stringstream ss;
        write_gmsh(m, ss);
        auto r = read_gmsh(ss);
        CHECK(r.num_vertices() == 27);
        CHECK(r.num_cells() == m.num_cells());
        CHECK(r.num_facets() == m.num_facets());
        CHECK(r.connectivity() == m.connectivity());
        CHECK(r.vertices() == m.vertices());
    }
    auto hole = generate_cube_with_hole(9, ElementKind::tet4);
    std::stringstream ss;
    write_gmsh(hole, ss);
    CHECK(read_gmsh(ss).markers() == hole.markers());
}

TEST_CASE("VTK legacy writer") {
    auto m = generate_box(1, 1, 1, ElementKind::hex8);
    std::vector<NodalField> fields{{"concentration", std::vector<double>(8, 0.5)}};
    std::ostringstream out;
    write_vtk(m, fields, out);
    const std::string s = out.str();
    CHECK(s.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
    CHECK(s.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(s.find("POINTS 8") != std::string::npos);
    CHECK(s.find("CELL_TYPES 1\n12\n") != std::string::npos);
    CHECK(s.find("POINT_DATA 8") != std::string::npos);
    CHECK(s.find("SCALARS concentration double") != std::string::npos);

    std::ostringstream tets;
    write_vtk(generate_box(1, 1, 1, ElementKind::tet4), {}, tets);
    CHECK(tets.str().find("CELL_TYPES 6\n10\n10\n10\n10\n10\n10\n") != std::string::npos);

    std::vector<NodalField> bad{{"c", std::vector<double>(3, 0.0)}};
    std::ostringstream sink;
    CHECK_THROWS_AS(write_vtk(m, bad, sink), DimensionError);
}
