#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nnd {

struct DmpReport {
    double min_value = 0;
    double max_value = 0;
    std::size_t n_below = 0;  ///< c < c_min - tol
    std::size_t n_above = 0;  ///< c > c_max + tol
    std::size_t n_total = 0;
    double percent_violated = 0;

    std::size_t violations() const noexcept { return n_below + n_above; }
};

/// Nodal maximum-principle check. Throws InvalidArgument when tol < 0.
/// An empty field reports zero counts and NaN extrema.
DmpReport dmp_check(std::span<const double> c, double c_min, double c_max, double tol = 0.0);

/// One row of a violation table.
struct DmpRow {
    std::string label;
    std::size_t vertices = 0;
    std::size_t cells = 0;
    DmpReport report;
};

/// "9,518/36,378 -> 26.2%" style violated-node column.
std::string format_violation_fraction(const DmpReport& report);

/// Thousands separators: 36378 -> "36,378".
std::string group_thousands(std::size_t value);

void write_dmp_markdown(std::span<const DmpRow> rows, std::ostream& out);
void write_dmp_csv(std::span<const DmpRow> rows, std::ostream& out);

}  // namespace nnd
