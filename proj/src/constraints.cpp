#include "cdcv/constraints.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "cdcv/error.hpp"

namespace cdcv {

const char* to_string(Severity s) {
    switch (s) {
    case Severity::Error: return "Error";
    case Severity::Warning: return "Warning";
    case Severity::Info: return "Info";
    }
    return "?";
}

namespace {

const std::set<std::string> kRules = {"MISSING_SYNC",      "COMB_ON_CDC",   "MISSING_RDC_SYNC",
                                      "COMB_ON_RDC",       "RESET_CONVERGENCE", "CONVERGENCE",
                                      "DIVERGENCE",        "STATIC_NOT_CONSTRAINED", "GATED_CLOCK_GLITCH",
                                      "BLACKBOX_BOUNDARY"};

std::optional<std::int64_t> to_int(const std::string& s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<Severity> to_severity(const std::string& s) {
    if (s == "Error" || s == "error") return Severity::Error;
    if (s == "Warning" || s == "warning") return Severity::Warning;
    if (s == "Info" || s == "info") return Severity::Info;
    return std::nullopt;
}

std::int64_t option_int(const ConstraintSet& c, const char* key, std::int64_t dflt) {
    auto it = c.options.find(key);
    if (it == c.options.end()) return dflt;
    return *to_int(it->second);
}

} // namespace

unsigned ConstraintSet::ndff_min_depth() const { return static_cast<unsigned>(option_int(*this, "ndff_min_depth", 2)); }
unsigned ConstraintSet::stability_cycles() const {
    return static_cast<unsigned>(option_int(*this, "stability_cycles", 2));
}
std::int64_t ConstraintSet::setup_window() const { return option_int(*this, "setup_window", 1); }
std::int64_t ConstraintSet::hold_window() const { return option_int(*this, "hold_window", 1); }

bool ConstraintSet::data_on_clock_is_error() const {
    auto it = options.find("data_on_clock");
    return it != options.end() && it->second == "error";
}

std::optional<Severity> ConstraintSet::severity_override(const std::string& rule) const {
    auto it = options.find("severity." + rule);
    if (it == options.end()) return std::nullopt;
    return to_severity(it->second);
}

const ClockSpec* ConstraintSet::find_clock(const std::string& name) const {
    for (const auto& c : clocks)
        if (c.name == name) return &c;
    return nullptr;
}

const ResetDecl* ConstraintSet::find_reset(const std::string& net) const {
    for (const auto& r : resets)
        if (r.net == net) return &r;
    return nullptr;
}

bool ConstraintSet::is_static(const std::string& net) const {
    return std::find(static_signals.begin(), static_signals.end(), net) != static_signals.end();
}

bool ConstraintSet::is_sync_cell(const std::string& module) const {
    return std::find(sync_cells.begin(), sync_cells.end(), module) != sync_cells.end();
}

std::vector<std::string> ConstraintSet::domains() const {
    std::set<std::string> ds;
    for (const auto& c : clocks) ds.insert(c.domain);
    for (const auto& r : resets) ds.insert(r.domain);
    return {ds.begin(), ds.end()};
}

ConstraintSet parse_constraints(std::string_view text, const std::string& origin, const ConstraintSet* base) {
    ConstraintSet cs = base ? *base : ConstraintSet{};
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::vector<std::string> w;
        for (std::string tok; ls >> tok;) w.push_back(tok);
        if (w.empty()) continue;
        auto err = [&](const char* code, const std::string& msg) {
            return ParseError(code, origin, lineno, 1, msg);
        };
        // Parse "-flag value" pairs after the positional words.
        auto flags = [&](std::size_t from, const std::set<std::string>& valued, const std::set<std::string>& bare) {
            std::map<std::string, std::string> f;
            for (std::size_t i = from; i < w.size(); ++i) {
                if (valued.count(w[i])) {
                    if (i + 1 >= w.size()) throw err("SyntaxError", "missing value for " + w[i]);
                    if (f.count(w[i])) throw err("SyntaxError", "repeated " + w[i]);
                    f[w[i]] = w[i + 1];
                    ++i;
                } else if (bare.count(w[i])) {
                    f[w[i]] = "1";
                } else {
                    throw err("SyntaxError", "unexpected '" + w[i] + "'");
                }
            }
            return f;
        };
        const std::string& d = w[0];
        if (d == "clock") {
            if (w.size() < 2 || w[1][0] == '-') throw err("SyntaxError", "clock needs a name");
            auto f = flags(2, {"-period", "-phase", "-domain"}, {});
            if (!f.count("-period") || !f.count("-domain")) throw err("SyntaxError", "clock needs -period and -domain");
            auto period = to_int(f["-period"]);
            if (!period) throw err("SyntaxError", "period must be an integer");
            if (*period < 2) throw err("BadPeriod", "period " + f["-period"] + " < 2");
            std::int64_t phase = 0;
            if (f.count("-phase")) {
                auto p = to_int(f["-phase"]);
                if (!p) throw err("SyntaxError", "phase must be an integer");
                if (*p < 0 || *p >= *period) throw err("BadPhase", "phase must lie in [0, period)");
                phase = *p;
            }
            if (cs.find_clock(w[1])) throw err("DuplicateClock", w[1]);
            cs.clocks.push_back(ClockSpec{w[1], *period, phase, f["-domain"]});
        } else if (d == "reset") {
            if (w.size() < 2 || w[1][0] == '-') throw err("SyntaxError", "reset needs a net");
            auto f = flags(2, {"-domain"}, {"-active_low"});
            if (!f.count("-domain")) throw err("SyntaxError", "reset needs -domain");
            if (cs.find_reset(w[1])) throw err("DuplicateReset", w[1]);
            cs.resets.push_back(ResetDecl{w[1], f.count("-active_low") > 0, f["-domain"]});
        } else if (d == "static") {
            if (w.size() != 2) throw err("SyntaxError", "usage: static <net>");
            if (!cs.is_static(w[1])) cs.static_signals.push_back(w[1]);
        } else if (d == "false_path") {
            auto f = flags(1, {"-from", "-to"}, {});
            if (!f.count("-from") || !f.count("-to")) throw err("SyntaxError", "false_path needs -from and -to");
            cs.false_paths.push_back(FalsePath{f["-from"], f["-to"]});
        } else if (d == "sync_cells") {
            if (w.size() < 2) throw err("SyntaxError", "usage: sync_cells <module>");
            for (std::size_t i = 1; i < w.size(); ++i)
                if (!cs.is_sync_cell(w[i])) cs.sync_cells.push_back(w[i]);
        } else if (d == "option") {
            if (w.size() != 3) throw err("SyntaxError", "usage: option <key> <value>");
            const std::string& key = w[1];
            const std::string& val = w[2];
            if (key == "ndff_min_depth" || key == "stability_cycles") {
                auto v = to_int(val);
                if (!v || *v < 1) throw err("BadOption", key + " must be a positive integer");
            } else if (key == "setup_window" || key == "hold_window") {
                auto v = to_int(val);
                if (!v || *v < 0) throw err("BadOption", key + " must be a non-negative integer");
            } else if (key == "data_on_clock") {
                if (val != "error" && val != "warning") throw err("BadOption", "data_on_clock is error|warning");
            } else if (key.rfind("severity.", 0) == 0) {
                if (!kRules.count(key.substr(9))) throw err("UnknownOption", key);
                if (!to_severity(val)) throw err("BadOption", key + " must be Error|Warning|Info");
            } else {
                throw err("UnknownOption", key);
            }
            cs.options[key] = val;
        } else {
            throw err("SyntaxError", "unknown directive '" + d + "'");
        }
    }
    return cs;
}

} // namespace cdcv
