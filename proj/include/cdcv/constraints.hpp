#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdcv {

struct ClockSpec {
    std::string name;
    std::int64_t period = 2;
    std::int64_t phase = 0;
    std::string domain;
    bool operator==(const ClockSpec&) const = default;
};

struct ResetDecl {
    std::string net;
    bool active_low = false;
    std::string domain;
    bool operator==(const ResetDecl&) const = default;
};

struct FalsePath {
    std::string from;
    std::string to;
    bool operator==(const FalsePath&) const = default;
};

enum class Severity { Error, Warning, Info };
const char* to_string(Severity s);

/// Designer-supplied CDC premises plus analysis options.
struct ConstraintSet {
    std::vector<ClockSpec> clocks;
    std::vector<ResetDecl> resets;
    std::vector<std::string> static_signals;
    std::vector<FalsePath> false_paths;
    std::vector<std::string> sync_cells;
    std::map<std::string, std::string> options;

    // Typed option accessors (defaults applied).
    unsigned ndff_min_depth() const;
    unsigned stability_cycles() const;
    std::int64_t setup_window() const;
    std::int64_t hold_window() const;
    bool data_on_clock_is_error() const;
    std::optional<Severity> severity_override(const std::string& rule) const;

    const ClockSpec* find_clock(const std::string& name) const;
    const ResetDecl* find_reset(const std::string& net) const;
    bool is_static(const std::string& net) const;
    bool is_sync_cell(const std::string& module) const;

    /// Domain ids of all clocks and resets, sorted and unique.
    std::vector<std::string> domains() const;
};

/// Parse the line-oriented constraints format. `base` (e.g. a defaults file)
/// is applied first; later directives override options. Throws ParseError
/// (SyntaxError, DuplicateClock, BadPeriod, UnknownOption, ...).
ConstraintSet parse_constraints(std::string_view text, const std::string& origin = "<constraints>",
                                const ConstraintSet* base = nullptr);

} // namespace cdcv
