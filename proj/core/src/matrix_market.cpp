#include "nnd/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nnd/error.hpp"

namespace nnd {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool parse_double(const std::string& token, double& out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

}  // namespace

CsrMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_matrix_market(in, path);
}

CsrMatrix read_matrix_market(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(source, 0, "empty file");
    ++line_no;
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix")
        throw ParseError(source, line_no, "missing %%MatrixMarket matrix banner");
    if (lower(format) != "coordinate") throw ParseError(source, line_no, "only coordinate format is supported");
    field = lower(field);
    if (field != "real" && field != "integer" && field != "double")
        throw ParseError(source, line_no, "unsupported field type '" + field + "'");
    symmetry = lower(symmetry);
    if (symmetry != "general" && symmetry != "symmetric")
        throw ParseError(source, line_no, "unsupported symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    long rows = -1, cols = -1, entries = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ss(line);
        if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
            throw ParseError(source, line_no, "malformed size line");
        break;
    }
    if (entries < 0) throw ParseError(source, line_no, "missing size line");

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
    long read = 0;
    while (read < entries && std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ss(line);
        long i, j;
        double v;
        if (!(ss >> i >> j >> v)) throw ParseError(source, line_no, "malformed entry");
        if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(source, line_no, "entry index out of range");
        t.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
        if (symmetric && i != j) t.push_back({static_cast<Index>(j - 1), static_cast<Index>(i - 1), v});
        ++read;
    }
    if (read != entries) throw ParseError(source, line_no, "file ended before all entries were read");
    return CsrMatrix::from_triplets(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(t));
}

void write_matrix_market(const CsrMatrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_matrix_market(a, out);
}

void write_matrix_market(const CsrMatrix& a, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
            out << i + 1 << ' ' << a.col_indices()[k] + 1 << ' ' << a.values()[k] << '\n';
}

std::vector<double> read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return read_vector(in, path);
}

std::vector<double> read_vector(std::istream& in, const std::string& source) {
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string token;
        while (ss >> token) {
            double v;
            if (!parse_double(token, v)) throw ParseError(source, line_no, "not a number: '" + token + "'");
            out.push_back(v);
        }
    }
    return out;
}

void write_vector(const std::vector<double>& v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    for (double x : v) out << x << '\n';
}

}  // namespace nnd
