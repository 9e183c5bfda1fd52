#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdcv/coverage.hpp"
#include "cdcv/rules.hpp"
#include "cdcv/stimulus.hpp"

namespace cdcv {

struct MsiConfig {
    enum class Mode { Random, Exhaustive };

    bool enabled = true;
    double probability = 0.5;
    std::optional<std::int64_t> setup_window; // ticks; default from constraints
    std::optional<std::int64_t> hold_window;
    std::map<std::string, double> pair_probability; // per-pair overrides
    Mode mode = Mode::Random;
    std::uint64_t seed = 1;
    unsigned max_decisions = 16; // Exhaustive only, at most 24

    /// Throws BadMsiConfig.
    void validate() const;
};

struct MsiEvent {
    std::int64_t tick = 0;
    std::string pair;
    unsigned bit = 0;
    MsiKind kind = MsiKind::Setup;
    bool resolved = false;
    bool operator==(const MsiEvent&) const = default;
};

struct Change {
    std::int64_t tick = 0; // -1 for the initial value
    std::uint64_t value = 0;
    bool operator==(const Change&) const = default;
};

struct CheckerSpec {
    enum class Kind { Stability, GrayCode, PulseWidth, Static, MuxEnable, Fifo, Latency };
    Kind kind = Kind::Stability;
    std::string subject; // pair id, sync id or static net
    unsigned min = 0;    // Latency
    unsigned max = 0;

    std::string name() const;
    bool operator==(const CheckerSpec&) const = default;
};
const char* to_string(CheckerSpec::Kind k);

/// Parse `kind:subject` or `latency:<pair id>:<min>:<max>`. Throws BadChecker.
CheckerSpec parse_checker(const std::string& text);

struct Verdict {
    std::string checker;
    bool pass = true;
    std::int64_t tick = -1; // first failure
    std::string message;
    bool operator==(const Verdict&) const = default;
};

struct SimTrace {
    std::vector<std::vector<Change>> waves; // by NetId, change-compressed
    std::vector<Verdict> verdicts;          // sorted by checker name
    std::vector<MsiEvent> msi;
    std::map<std::string, std::uint64_t> edges; // rising edges per clock
    std::int64_t end_tick = 0;

    std::uint64_t value_at(NetId net, std::int64_t tick) const;
    const Verdict* verdict(const std::string& checker) const;
    bool operator==(const SimTrace&) const = default;
};

struct SimResult {
    SimTrace trace;
    CoverageDb coverage;
    std::vector<char> decisions; // one per MSI opportunity, 1 = violation taken
};

/// Checkers implied by the recognized synchronizers and static declarations.
std::vector<CheckerSpec> default_checkers(const Analysis& a);

/// A checker bound to nets and sampling clocks. Shared by the runtime
/// checkers and the assertion generator so both observe the same signals.
struct ResolvedChecker {
    CheckerSpec spec;
    std::string clock;              // sampling clock (write clock for Fifo)
    NetId sig = 0;                  // source / pulse / static net
    unsigned samples = 0;           // Stability: samples a value must hold
    NetId observe = 0;              // Latency: synchronizer output
    NetId select = 0;               // MuxEnable
    std::vector<NetId> data;        // MuxEnable: captured data nets
    NetId wptr = 0, rq = 0;         // Fifo, write side: pointer, synced read pointer
    NetId rptr = 0, wq = 0;         // Fifo, read side
    std::string rclock;             // Fifo read clock
    std::vector<std::pair<NetId, bool>> disable; // Static: reset nets, active-low flag
};

/// Throws UnknownCheckerSubject, BadChecker.
ResolvedChecker resolve_checker(const Analysis& a, const CheckerSpec& c);

/// Multi-clock simulation with metastability injection at the capture flop of
/// every unsuppressed crossing. Throws StimulusOutOfRange, SimDivergence.
SimResult simulate(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                   const std::vector<CheckerSpec>& checkers = {});

/// Injection off; the idealized two-valued simulation.
SimTrace reference_simulate(const Analysis& a, const Stimulus& s, const std::vector<CheckerSpec>& checkers = {});

/// Run one simulation per seed, concurrently. Results are in seed order.
std::vector<SimResult> simulate_seeds(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                                      const std::vector<CheckerSpec>& checkers,
                                      const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

struct ExploreVerdict {
    bool proven = true;
    std::optional<SimResult> counterexample; // first failing branch in lexicographic order
};

struct ExploreResult {
    std::map<std::string, ExploreVerdict> verdicts; // by checker name
    std::uint64_t branches = 0;
    unsigned max_decisions_seen = 0;
};

/// Enumerate every combination of MSI decisions along the stimulus.
/// Throws DecisionBudgetExceeded when a branch needs more than
/// `msi.max_decisions` decisions.
ExploreResult explore_exhaustive(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                                 const std::vector<CheckerSpec>& checkers);

/// Value-change dump of every named net.
void write_vcd(std::ostream& os, const Netlist& nl, const SimTrace& t);

nlohmann::json trace_to_json(const Netlist& nl, const SimTrace& t, bool waves);

} // namespace cdcv
