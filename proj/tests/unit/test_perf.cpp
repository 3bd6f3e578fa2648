#include <doctest.h>

#include <sstream>

#include "nnd/error.hpp"
#include "nnd/perf.hpp"

using namespace nnd;

namespace {

OpLedger ledger_of(std::uint64_t flops, std::uint64_t bytes) {
    OpLedger l;
    l.record("Synthetic", flops, bytes);
    return l;
}

}  // namespace

TEST_CASE("arithmetic intensity examples") {
    OpLedger l;
    std::vector<double> x1{1.0};
    vec::dot(x1, x1, l);
    CHECK(arithmetic_intensity(l) == doctest::Approx(2.0 / 24.0));

    OpLedger a;
    std::vector<double> x(10, 1.0), y(10, 2.0);
    vec::axpy(y, 0.5, x, a);
    CHECK(a.flops() == 20);
    CHECK(a.bytes() == 240);
    CHECK(arithmetic_intensity(a) == doctest::Approx(1.0 / 12.0));

    CHECK(arithmetic_intensity(ledger_of(1000, 8000)) == 0.125);
    CHECK_THROWS_AS(arithmetic_intensity(OpLedger{}), NumericalError);
}

TEST_CASE("envelopes") {
    CHECK(PerfEnvelope::mustang_single_core().tpp == 9.2e9);
    CHECK(PerfEnvelope::mustang_single_core().streams_bw == 5.65e9);
    CHECK(PerfEnvelope::wolf_single_core().tpp == 20.8e9);
    CHECK(PerfEnvelope::wolf_single_core().streams_bw == 15.5e9);
    CHECK_THROWS_AS((PerfEnvelope{0, 1}).validate(), InvalidArgument);
    CHECK_THROWS_AS((PerfEnvelope{1, -1}).validate(), InvalidArgument);
    CHECK_THROWS_AS(efficiency(ledger_of(1, 1), 1.0, PerfEnvelope{1, 0}), InvalidArgument);
}

TEST_CASE("efficiency examples") {
    const auto env = PerfEnvelope::mustang_single_core();
    const auto l = ledger_of(1000, 8000);
    CHECK(ideal_rate(0.125, env) == doctest::Approx(0.70625e9).epsilon(1e-15));

    const double wall = 1000.0 / ideal_rate(0.125, env);
    auto r = efficiency(l, wall, env);
    CHECK(r.efficiency_pct == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.bound == Bound::memory);

    auto c = efficiency(ledger_of(1000, 10), 1.0, env);
    CHECK(c.bound == Bound::compute);
    CHECK(c.ideal_flops_per_s == env.tpp);

    auto over = efficiency(ledger_of(1'000'000'000, 10'000'000'000ULL), 1.0, env);
    CHECK(over.ai == doctest::Approx(0.1));
    CHECK(over.ideal_flops_per_s == doctest::Approx(5.65e8));
    CHECK(over.efficiency_pct == doctest::Approx(176.99115).epsilon(1e-6));
    CHECK(over.over_unity);
    CHECK_FALSE(r.over_unity);

    CHECK_THROWS_AS(efficiency(l, 0.0, env), InvalidArgument);
    CHECK_THROWS_AS(efficiency(l, -1.0, env), InvalidArgument);
}

TEST_CASE("AI is invariant under ledger scaling") {
    OpLedger base;
    base.record("MatMult", 1000, 8000);
    base.record("VecDot", 200, 1608);
    base.record("VecAXPY", 200, 2400);
    for (std::uint64_t k : {2ULL, 7ULL, 1000ULL}) {
        OpLedger scaled;
        for (const auto& [name, s] : base.kernels()) scaled.record(name, s.flops * k, s.bytes * k);
        CHECK(arithmetic_intensity(scaled) == doctest::Approx(arithmetic_intensity(base)).epsilon(1e-15));
    }
}

TEST_CASE("efficiency is nonincreasing in wall time") {
    const auto l = ledger_of(5000, 30000);
    double last = 1e300;
    for (double t = 1e-7; t < 1e-2; t *= 1.7) {
        const double e = efficiency(l, t, PerfEnvelope::wolf_single_core()).efficiency_pct;
        CHECK(e <= last);
        last = e;
    }
}

TEST_CASE("per-kernel rows sum to the totals") {
    OpLedger l;
    std::vector<double> x(50, 1.0), y(50, 2.0);
    for (int i = 0; i < 3; ++i) vec::axpy(y, 0.1, x, l);
    vec::dot(x, y, l);
    vec::norm2(x, l);
    spmv(CsrMatrix::identity(50), x, y, l);
    const auto r = efficiency(l, 1e-3, PerfEnvelope::mustang_single_core());
    std::uint64_t f = 0, b = 0;
    for (const auto& k : r.kernels) {
        f += k.flops;
        b += k.bytes;
    }
    CHECK(f == r.flops);
    CHECK(b == r.bytes);
    CHECK(r.kernels.size() == 4);

    std::ostringstream csv;
    write_csv(r, csv);
    CHECK(csv.str().rfind("kernel,calls,flops,bytes,ai\n", 0) == 0);
    CHECK(csv.str().find("VecAXPY,3,300,3600,") != std::string::npos);
}

TEST_CASE("JSON report round trip") {
    OpLedger l;
    l.record("MatMult", 1000, 8000);
    l.record("VecDot", 200, 1608);
    const auto r = efficiency(l, 2.5e-6, PerfEnvelope::mustang_single_core());
    const auto text = to_json(r);
    for (const char* key : {"\"flops\"", "\"bytes\"", "\"ai\"", "\"wall_time_s\"", "\"measured_flops_per_s\"",
                            "\"ideal_flops_per_s\"", "\"efficiency_pct\"", "\"bound\"", "\"kernels\""})
        CHECK(text.find(key) != std::string::npos);
    const auto snap = ledger_from_json(text);
    CHECK(snap.ledger.flops() == l.flops());
    CHECK(snap.ledger.bytes() == l.bytes());
    CHECK(snap.ledger.kernels().at("VecDot").bytes == 1608);
    CHECK(snap.wall_time_s == 2.5e-6);
    const auto again = efficiency(snap.ledger, snap.wall_time_s, PerfEnvelope::mustang_single_core());
    CHECK(again.efficiency_pct == r.efficiency_pct);

    CHECK(ledger_from_json("{\"perf\":" + text + "}").ledger.flops() == l.flops());
    CHECK_THROWS(ledger_from_json("not json"));
}
