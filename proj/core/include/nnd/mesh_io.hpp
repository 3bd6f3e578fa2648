#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nnd/mesh.hpp"

namespace nnd {

struct NodalField {
    std::string name;
    std::vector<double> values;
};

/// Gmsh MSH 2.2 ASCII. Volume elements must all be tet4 (type 4) or all hex8
/// (type 5); triangles (2) and quads (3) become boundary facets marked with
/// their physical tag. Points and lines are ignored.
Mesh read_gmsh(const std::string& path);
Mesh read_gmsh(std::istream& in, const std::string& source_name = "<stream>");

void write_gmsh(const Mesh& mesh, const std::string& path);
void write_gmsh(const Mesh& mesh, std::ostream& out);

/// VTK legacy ASCII 3.0 unstructured grid with one POINT_DATA scalar per field.
void write_vtk(const Mesh& mesh, std::span<const NodalField> fields, const std::string& path);
void write_vtk(const Mesh& mesh, std::span<const NodalField> fields, std::ostream& out);

}  // namespace nnd
