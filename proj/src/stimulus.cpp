#include "cdcv/stimulus.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "cdcv/error.hpp"

namespace cdcv {

namespace {

std::optional<std::uint64_t> parse_value(const std::string& s) {
    int base = 10;
    std::size_t off = 0;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        off = 2;
    } else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) {
        base = 2;
        off = 2;
    }
    std::uint64_t v = 0;
    const char* b = s.data() + off;
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, v, base);
    if (ec != std::errc() || p != e || b == e) return std::nullopt;
    return v;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace

Stimulus parse_stimulus(std::string_view text, const std::string& origin) {
    Stimulus st;
    st.origin = origin;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    std::map<std::string, std::uint64_t> last_edge;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
        std::istringstream ls(raw);
        std::vector<std::string> w;
        for (std::string t; ls >> t;) w.push_back(t);
        if (w.empty()) continue;
        auto err = [&](const char* code, const std::string& msg) { return ParseError(code, origin, lineno, 1, msg); };
        if (w[0] == "at") {
            if (w.size() != 6 || w[3] != "set") throw err("SyntaxError", "usage: at <clock> <edge#> set <port> <value>");
            auto edge = parse_value(w[2]);
            auto val = parse_value(w[5]);
            if (!edge) throw err("SyntaxError", "bad edge index '" + w[2] + "'");
            if (!val) throw err("SyntaxError", "bad value '" + w[5] + "'");
            auto [it, fresh] = last_edge.emplace(w[1], *edge);
            if (!fresh) {
                if (*edge < it->second)
                    throw err("NonMonotonicEdge", "edge " + w[2] + " of " + w[1] + " after edge " +
                                                      std::to_string(it->second));
                it->second = *edge;
            }
            st.sets.push_back({w[1], *edge, w[4], *val, lineno});
        } else if (w[0] == "random") {
            RandomDriver r;
            r.line = lineno;
            bool have_ports = false, have_seed = false;
            for (std::size_t i = 1; i < w.size(); i += 2) {
                if (i + 1 >= w.size()) throw err("SyntaxError", "missing value for " + w[i]);
                const std::string& v = w[i + 1];
                if (w[i] == "-ports") {
                    r.ports = split_commas(v);
                    have_ports = !r.ports.empty();
                } else if (w[i] == "-p") {
                    char* end = nullptr;
                    r.p = std::strtod(v.c_str(), &end);
                    if (end != v.c_str() + v.size() || !(r.p >= 0.0 && r.p <= 1.0))
                        throw err("SyntaxError", "-p must be a probability in [0,1]");
                } else if (w[i] == "-seed") {
                    auto s = parse_value(v);
                    if (!s) throw err("SyntaxError", "bad seed '" + v + "'");
                    r.seed = *s;
                    have_seed = true;
                } else if (w[i] == "-clock") {
                    r.clock = v;
                } else {
                    throw err("SyntaxError", "unexpected '" + w[i] + "'");
                }
            }
            if (!have_ports || !have_seed) throw err("SyntaxError", "random needs -ports and -seed");
            st.random.push_back(std::move(r));
        } else if (w[0] == "run") {
            auto n = w.size() >= 3 ? parse_value(w[1]) : std::nullopt;
            if (w.size() == 4 && w[2] == "of" && n) {
                st.run_edges = {*n, w[3]};
            } else if (w.size() == 3 && w[2] == "ticks" && n) {
                st.run_ticks = static_cast<std::int64_t>(*n);
            } else {
                throw err("SyntaxError", "usage: run <edges> of <clock> | run <n> ticks");
            }
        } else {
            throw err("SyntaxError", "unknown directive '" + w[0] + "'");
        }
    }
    return st;
}

void check_stimulus(const Stimulus& s, const Netlist& nl, const ConstraintSet& cs) {
    auto input = [&](const std::string& name, int line) -> const Port& {
        auto p = nl.find_port(name);
        if (!p || nl.ports[*p].dir != PortDir::In || cs.find_clock(name))
            throw Error("UnknownPort", s.origin + ":" + std::to_string(line) + ": '" + name +
                                           "' is not a driveable input port");
        return nl.ports[*p];
    };
    auto clock = [&](const std::string& name, int line) {
        if (!cs.find_clock(name))
            throw Error("UnknownClock", s.origin + ":" + std::to_string(line) + ": '" + name + "' is not declared");
    };
    if (!s.run_edges && !s.run_ticks) throw Error("MissingRunLength", s.origin + ": no run directive");
    if (s.run_edges) clock(s.run_edges->second, 0);
    if (cs.clocks.empty()) throw Error("UnknownClock", "no clocks declared");
    for (const auto& st : s.sets) {
        clock(st.clock, st.line);
        const Port& p = input(st.port, st.line);
        if (st.value & ~width_mask(p.width))
            throw Error("StimulusOutOfRange", s.origin + ":" + std::to_string(st.line) + ": value " +
                                                  std::to_string(st.value) + " does not fit " + p.name + "[" +
                                                  std::to_string(p.width) + "]");
    }
    for (const auto& r : s.random) {
        if (!r.clock.empty()) clock(r.clock, r.line);
        for (const auto& p : r.ports) input(p, r.line);
    }
}

} // namespace cdcv
