#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdcv/constraints.hpp"
#include "cdcv/netlist.hpp"

namespace cdcv {

/// `at <clock> <edge#> set <port> <value>`. Edge 0 means "before the first
/// edge"; edge n >= 1 applies right after the n-th rising edge of the clock.
struct StimSet {
    std::string clock;
    std::uint64_t edge = 0;
    std::string port;
    std::uint64_t value = 0;
    int line = 0;
};

/// `random -ports a,b -p 0.25 -seed 7 [-clock clk]`: every bit of every port
/// flips with probability p after each edge of the clock.
struct RandomDriver {
    std::vector<std::string> ports;
    double p = 0.5;
    std::uint64_t seed = 0;
    std::string clock; // empty: first declared clock
    int line = 0;
};

struct Stimulus {
    std::vector<StimSet> sets;
    std::vector<RandomDriver> random;
    std::optional<std::pair<std::uint64_t, std::string>> run_edges; // `run <n> of <clock>`
    std::optional<std::int64_t> run_ticks;                          // `run <n> ticks`
    std::string origin = "<stimulus>";
};

/// Throws ParseError: SyntaxError, NonMonotonicEdge.
Stimulus parse_stimulus(std::string_view text, const std::string& origin = "<stimulus>");

/// Resolve names against a design. Throws Error: UnknownPort, UnknownClock,
/// StimulusOutOfRange, MissingRunLength.
void check_stimulus(const Stimulus& s, const Netlist& nl, const ConstraintSet& cs);

} // namespace cdcv
