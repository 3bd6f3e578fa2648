#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nnd/sparse.hpp"

namespace nnd {

struct PerfEnvelope {
    double tpp = 0;         ///< peak FLOPS/s: clock x FLOPs/cycle x cores
    double streams_bw = 0;  ///< sustained streaming bandwidth, bytes/s

    /// Throws InvalidArgument unless both are positive and finite.
    void validate() const;

    static PerfEnvelope mustang_single_core() { return {2.3e9 * 4, 5.65e9}; }
    static PerfEnvelope wolf_single_core() { return {2.6e9 * 8, 15.5e9}; }
};

enum class Bound { memory, compute };

std::string_view to_string(Bound bound);

struct KernelRow {
    std::string name;
    std::uint64_t calls = 0;
    std::uint64_t flops = 0;
    std::uint64_t bytes = 0;
};

struct PerfReport {
    std::uint64_t flops = 0;
    std::uint64_t bytes = 0;
    double ai = 0;
    double wall_time_s = 0;
    double measured_flops_per_s = 0;
    double ideal_flops_per_s = 0;
    double efficiency_pct = 0;
    Bound bound = Bound::memory;
    /// Efficiency above 100%: the perfect-cache byte model was beaten.
    bool over_unity = false;
    std::vector<KernelRow> kernels;
};

/// flops / bytes. Throws NumericalError when no bytes were recorded.
double arithmetic_intensity(const OpLedger& ledger);

/// min(tpp, ai * streams_bw).
double ideal_rate(double ai, const PerfEnvelope& envelope);

/// Throws InvalidArgument unless wall_time_s > 0.
PerfReport efficiency(const OpLedger& ledger, double wall_time_s, const PerfEnvelope& envelope);

std::string to_json(const PerfReport& report, int indent = 2);
void write_csv(const PerfReport& report, std::ostream& out);

/// Rebuilds the ledger and wall time from a JSON report.
struct LedgerSnapshot {
    OpLedger ledger;
    double wall_time_s = 0;
};
LedgerSnapshot ledger_from_json(std::string_view text);

}  // namespace nnd
