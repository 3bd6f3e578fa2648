#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nnd/diagnostics.hpp"
#include "nnd/error.hpp"

using namespace nnd;

TEST_CASE("dmp_check examples") {
    auto r = dmp_check(std::vector<double>{-0.1, 0.5, 1.2, 0.0, 1.0}, 0, 1);
    CHECK(r.min_value == -0.1);
    CHECK(r.max_value == 1.2);
    CHECK(r.n_below == 1);
    CHECK(r.n_above == 1);
    CHECK(r.n_total == 5);
    CHECK(r.violations() == 2);
    CHECK(r.percent_violated == doctest::Approx(40.0));

    auto tol = dmp_check(std::vector<double>{-1e-13, 1 + 1e-13}, 0, 1, 1e-12);
    CHECK(tol.violations() == 0);

    auto clean = dmp_check(std::vector<double>{0.0, 1.0}, 0, 1);
    CHECK(clean.violations() == 0);
    CHECK(clean.percent_violated == 0.0);

    auto empty = dmp_check(std::vector<double>{}, 0, 1);
    CHECK(empty.n_total == 0);
    CHECK(std::isnan(empty.min_value));
    CHECK(std::isnan(empty.max_value));

    CHECK_THROWS_AS(dmp_check(std::vector<double>{0.5}, 0, 1, -1e-3), InvalidArgument);
}

TEST_CASE("dmp_check is invariant under permutation") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.5, 0.6);
    std::vector<double> c(500);
    for (auto& v : c) v = n(rng);
    const auto ref = dmp_check(c, 0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(c.begin(), c.end(), rng);
        const auto r = dmp_check(c, 0, 1);
        CHECK(r.min_value == ref.min_value);
        CHECK(r.max_value == ref.max_value);
        CHECK(r.n_below == ref.n_below);
        CHECK(r.n_above == ref.n_above);
    }
}

TEST_CASE("violation formatting") {
    CHECK(group_thousands(0) == "0");
    CHECK(group_thousands(999) == "999");
    CHECK(group_thousands(36378) == "36,378");
    CHECK(group_thousands(1234567) == "1,234,567");

    DmpReport r;
    r.n_below = 9518;
    r.n_total = 36378;
    r.percent_violated = 100.0 * 9518 / 36378;
    CHECK(format_violation_fraction(r) == "9,518/36,378 → 26.2%");
}

TEST_CASE("violation tables") {
    std::vector<DmpRow> rows{{"n=9", 1000, 4374, dmp_check(std::vector<double>{-0.04, 0.3, 1.0}, 0, 1)}};
    std::ostringstream md, csv;
    write_dmp_markdown(rows, md);
    write_dmp_csv(rows, csv);
    CHECK(md.str().find("| Case | Vertices | Cells | Min. concentration | Max. concentration | % nodes violated |") !=
          std::string::npos);
    CHECK(md.str().find("| n=9 | 1,000 | 4,374 |") != std::string::npos);
    CHECK(csv.str().find("n=9,1000,4374,") != std::string::npos);
}
