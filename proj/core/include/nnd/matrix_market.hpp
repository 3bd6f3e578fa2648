#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nnd/sparse.hpp"

namespace nnd {

/// MatrixMarket coordinate format (real or integer; general or symmetric).
/// Symmetric files are expanded to both triangles.
CsrMatrix read_matrix_market(const std::string& path);
CsrMatrix read_matrix_market(std::istream& in, const std::string& source_name = "<stream>");

/// Writes "coordinate real general" with 17 significant digits.
void write_matrix_market(const CsrMatrix& a, const std::string& path);
void write_matrix_market(const CsrMatrix& a, std::ostream& out);

/// Whitespace-separated numbers; '#' starts a comment. "inf" and "-inf" are
/// accepted so bound vectors can mark missing bounds.
std::vector<double> read_vector(const std::string& path);
std::vector<double> read_vector(std::istream& in, const std::string& source_name = "<stream>");
void write_vector(const std::vector<double>& v, const std::string& path);

}  // namespace nnd
