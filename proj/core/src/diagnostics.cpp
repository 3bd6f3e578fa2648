#include "nnd/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nnd/error.hpp"

namespace nnd {

DmpReport dmp_check(std::span<const double> c, double c_min, double c_max, double tol) {
    if (!(tol >= 0)) throw InvalidArgument("dmp_check: tolerance must be non-negative");
    DmpReport r;
    r.n_total = c.size();
    if (c.empty()) {
        r.min_value = r.max_value = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.min_value = c[0];
    r.max_value = c[0];
    for (double v : c) {
        r.min_value = std::min(r.min_value, v);
        r.max_value = std::max(r.max_value, v);
        if (v < c_min - tol) ++r.n_below;
        if (v > c_max + tol) ++r.n_above;
    }
    r.percent_violated = 100.0 * static_cast<double>(r.violations()) / static_cast<double>(r.n_total);
    return r;
}

std::string group_thousands(std::size_t value) {
    std::string digits = std::to_string(value);
    std::string out;
    const std::size_t lead = digits.size() % 3;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i != 0 && (i + 3 - lead) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

std::string format_violation_fraction(const DmpReport& report) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f%%", report.percent_violated);
    return group_thousands(report.violations()) + "/" + group_thousands(report.n_total) + " → " + pct;
}

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void write_dmp_markdown(std::span<const DmpRow> rows, std::ostream& out) {
    out << "| Case | Vertices | Cells | Min. concentration | Max. concentration | % nodes violated |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.label << " | " << group_thousands(r.vertices) << " | " << group_thousands(r.cells) << " | "
            << fmt_g(r.report.min_value) << " | " << fmt_g(r.report.max_value) << " | "
            << format_violation_fraction(r.report) << " |\n";
    }
}

void write_dmp_csv(std::span<const DmpRow> rows, std::ostream& out) {
    out << "case,vertices,cells,min,max,n_below,n_above,n_total,percent_violated\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.vertices << ',' << r.cells << ',' << fmt_g(r.report.min_value) << ','
            << fmt_g(r.report.max_value) << ',' << r.report.n_below << ',' << r.report.n_above << ','
            << r.report.n_total << ',' << fmt_g(r.report.percent_violated) << '\n';
    }
}

}  // namespace nnd
