#include "nnd/perf.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "nnd/error.hpp"
#include "detail/log.hpp"

namespace nnd {

void PerfEnvelope::validate() const {
    if (!(tpp > 0) || !std::isfinite(tpp)) throw InvalidArgument("perf envelope: tpp must be positive");
    if (!(streams_bw > 0) || !std::isfinite(streams_bw))
        throw InvalidArgument("perf envelope: streams_bw must be positive");
}

std::string_view to_string(Bound bound) { return bound == Bound::memory ? "memory" : "compute"; }

double arithmetic_intensity(const OpLedger& ledger) {
    if (ledger.bytes() == 0) throw NumericalError("arithmetic intensity undefined: no bytes recorded");
    return static_cast<double>(ledger.flops()) / static_cast<double>(ledger.bytes());
}

double ideal_rate(double ai, const PerfEnvelope& envelope) { return std::min(envelope.tpp, ai * envelope.streams_bw); }

PerfReport efficiency(const OpLedger& ledger, double wall_time_s, const PerfEnvelope& envelope) {
    envelope.validate();
    if (!(wall_time_s > 0)) throw InvalidArgument("efficiency: wall time must be positive");
    PerfReport r;
    r.flops = ledger.flops();
    r.bytes = ledger.bytes();
    r.ai = arithmetic_intensity(ledger);
    r.wall_time_s = wall_time_s;
    r.measured_flops_per_s = static_cast<double>(r.flops) / wall_time_s;
    r.bound = r.ai * envelope.streams_bw < envelope.tpp ? Bound::memory : Bound::compute;
    r.ideal_flops_per_s = ideal_rate(r.ai, envelope);
    r.efficiency_pct = r.measured_flops_per_s / r.ideal_flops_per_s * 100.0;
    r.over_unity = r.efficiency_pct > 100.0;
    if (r.over_unity) log::warn("efficiency {:.2f}% exceeds the roofline bound", r.efficiency_pct);
    for (const auto& [name, k] : ledger.kernels()) r.kernels.push_back({name, k.calls, k.flops, k.bytes});
    return r;
}

std::string to_json(const PerfReport& r, int indent) {
    nlohmann::ordered_json j;
    j["flops"] = r.flops;
    j["bytes"] = r.bytes;
    j["ai"] = r.ai;
    j["wall_time_s"] = r.wall_time_s;
    j["measured_flops_per_s"] = r.measured_flops_per_s;
    j["ideal_flops_per_s"] = r.ideal_flops_per_s;
    j["efficiency_pct"] = r.efficiency_pct;
    j["bound"] = std::string(to_string(r.bound));
    j["over_unity"] = r.over_unity;
    auto& ks = j["kernels"] = nlohmann::ordered_json::array();
    for (const auto& k : r.kernels) {
        nlohmann::ordered_json row;
        row["name"] = k.name;
        row["calls"] = k.calls;
        row["flops"] = k.flops;
        row["bytes"] = k.bytes;
        ks.push_back(std::move(row));
    }
    return j.dump(indent);
}

void write_csv(const PerfReport& r, std::ostream& out) {
    out << "kernel,calls,flops,bytes,ai\n";
    for (const auto& k : r.kernels) {
        out << k.name << ',' << k.calls << ',' << k.flops << ',' << k.bytes << ',';
        if (k.bytes > 0) out << static_cast<double>(k.flops) / static_cast<double>(k.bytes);
        out << '\n';
    }
}

LedgerSnapshot ledger_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("perf report", 0, e.what());
    }
    // A solve report nests the perf block; a bare perf report does not.
    const nlohmann::json& p = j.contains("perf") ? j.at("perf") : j;
    LedgerSnapshot snap;
    try {
        snap.wall_time_s = p.at("wall_time_s").get<double>();
        for (const auto& k : p.at("kernels")) {
            KernelStats totals{k.at("calls").get<std::uint64_t>(), k.at("flops").get<std::uint64_t>(),
                               k.at("bytes").get<std::uint64_t>()};
            snap.ledger.record(k.at("name").get<std::string>(), totals);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("perf report", 0, e.what());
    }
    return snap;
}

}  // namespace nnd
