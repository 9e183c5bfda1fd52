#pragma once

// Simulation-level oracles shared by the unit tests and the acceptance runner.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "cdcv/corpus.hpp"
#include "cdcv/sim.hpp"

namespace cdcv::testing {

inline std::filesystem::path corpus_root() { return std::filesystem::path(CDCV_SOURCE_DIR) / "corpus"; }

/// Default checkers plus the extra checks named in the labels.
inline std::vector<CheckerSpec> case_checkers(const LoadedCase& c) {
    auto out = default_checkers(c.analysis);
    for (const auto& s : c.labels.checks) out.push_back(parse_checker(s));
    return out;
}

/// Rising-edge ticks of `clock` in [0, end].
inline std::vector<std::int64_t> edge_ticks(const ConstraintSet& cs, const std::string& clock, std::int64_t end) {
    const ClockSpec* c = cs.find_clock(clock);
    std::vector<std::int64_t> out;
    if (!c) return out;
    for (std::int64_t t = c->phase; t <= end; t += c->period)
        if (t >= 0) out.push_back(t);
    return out;
}

/// Destination edges where the captured word is none of the source codewords
/// present around the edge (the MSI windows). Zero for a gray-coded crossing.
inline unsigned codeword_violations(const Analysis& a, const SimTrace& t, const std::string& src,
                                    const std::string& dst, const std::string& dst_clock) {
    NetId s = a.netlist.net(src), d = a.netlist.net(dst);
    std::int64_t sw = a.constraints.setup_window(), hw = a.constraints.hold_window();
    unsigned bad = 0;
    for (std::int64_t e : edge_ticks(a.constraints, dst_clock, t.end_tick)) {
        if (e + hw > t.end_tick) break; // lookahead past the trace
        std::set<std::uint64_t> words;
        for (std::int64_t k = e - sw - 1; k <= e + hw; ++k) words.insert(t.value_at(s, k));
        if (!words.count(t.value_at(d, e))) ++bad;
    }
    return bad;
}

} // namespace cdcv::testing
