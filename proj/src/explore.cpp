#include <algorithm>
#include <atomic>
#include <future>
#include <ostream>
#include <thread>

#include "cdcv/error.hpp"
#include "sim_internal.hpp"

namespace cdcv {

std::vector<SimResult> simulate_seeds(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                                      const std::vector<CheckerSpec>& checkers,
                                      const std::vector<std::uint64_t>& seeds, unsigned threads) {
    msi.validate();
    check_stimulus(s, a.netlist, a.constraints);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size())));
    std::vector<SimResult> out(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
            MsiConfig c = msi;
            c.seed = seeds[i];
            detail::RandomDecider d(c);
            out[i] = detail::run_with(a, s, c, checkers, d);
        }
    };
    std::vector<std::future<void>> fs;
    for (unsigned t = 0; t < threads; ++t) fs.push_back(std::async(std::launch::async, worker));
    for (auto& f : fs) f.get(); // rethrows the first worker error
    return out;
}

ExploreResult explore_exhaustive(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                                 const std::vector<CheckerSpec>& checkers) {
    MsiConfig c = msi;
    c.mode = MsiConfig::Mode::Exhaustive;
    c.enabled = true;
    c.validate();
    check_stimulus(s, a.netlist, a.constraints);

    ExploreResult res;
    for (const auto& ck : checkers) res.verdicts[ck.name()] = {};
    // Depth-first over decision vectors with 0 (skip) before 1 (take):
    // the next branch flips the last 0 of the previous one.
    std::vector<char> prefix;
    for (;;) {
        detail::ForcedDecider d(prefix);
        SimResult r = detail::run_with(a, s, c, checkers, d);
        ++res.branches;
        unsigned n = static_cast<unsigned>(r.decisions.size());
        res.max_decisions_seen = std::max(res.max_decisions_seen, n);
        if (n > c.max_decisions)
            throw Error("DecisionBudgetExceeded", "a branch needs " + std::to_string(n) +
                                                      " decisions, budget is " + std::to_string(c.max_decisions));
        for (const auto& v : r.trace.verdicts) {
            auto& ev = res.verdicts[v.checker];
            if (!v.pass && ev.proven) {
                ev.proven = false;
                ev.counterexample = r;
            }
        }
        std::vector<char> dec = r.decisions;
        while (!dec.empty() && dec.back()) dec.pop_back();
        if (dec.empty()) break;
        dec.back() = 1;
        prefix = std::move(dec);
    }
    return res;
}

namespace {

std::string vcd_id(std::size_t i) {
    std::string s;
    do {
        s.push_back(static_cast<char>(33 + i % 94));
        i /= 94;
    } while (i);
    return s;
}

void vcd_value(std::ostream& os, unsigned width, std::uint64_t v, const std::string& id) {
    if (width == 1) {
        os << (v & 1) << id << "\n";
        return;
    }
    os << 'b';
    bool lead = true;
    for (int b = static_cast<int>(width) - 1; b >= 0; --b) {
        bool bit = (v >> b) & 1;
        if (bit) lead = false;
        if (!lead || b == 0) os << (bit ? '1' : '0');
    }
    os << ' ' << id << "\n";
}

} // namespace

void write_vcd(std::ostream& os, const Netlist& nl, const SimTrace& t) {
    std::vector<NetId> nets;
    for (NetId n = 0; n < nl.nets.size(); ++n)
        if (nl.nets[n].name.find('$') == std::string::npos) nets.push_back(n);
    std::vector<std::string> ids(nl.nets.size());
    os << "$version cdcv " << CDCV_VERSION << " $end\n$timescale 1ns $end\n$scope module " << nl.name << " $end\n";
    for (std::size_t i = 0; i < nets.size(); ++i) {
        ids[nets[i]] = vcd_id(i);
        os << "$var wire " << nl.nets[nets[i]].width << " " << ids[nets[i]] << " " << nl.nets[nets[i]].name
           << " $end\n";
    }
    os << "$upscope $end\n$enddefinitions $end\n#0\n$dumpvars\n";
    for (NetId n : nets) vcd_value(os, nl.nets[n].width, t.value_at(n, 0), ids[n]);
    os << "$end\n";
    // Merge per-net change lists into time order.
    std::map<std::int64_t, std::vector<std::pair<NetId, std::uint64_t>>> by_tick;
    for (NetId n : nets)
        for (const auto& c : t.waves[n])
            if (c.tick > 0) by_tick[c.tick].emplace_back(n, c.value);
    for (const auto& [tick, ch] : by_tick) {
        os << "#" << tick << "\n";
        for (auto [n, v] : ch) vcd_value(os, nl.nets[n].width, v, ids[n]);
    }
    os << "#" << t.end_tick << "\n";
}

nlohmann::json trace_to_json(const Netlist& nl, const SimTrace& t, bool waves) {
    using nlohmann::json;
    json verdicts = json::array();
    for (const auto& v : t.verdicts) {
        json j = {{"checker", v.checker}, {"pass", v.pass}};
        if (!v.pass) {
            j["tick"] = v.tick;
            j["message"] = v.message;
        }
        verdicts.push_back(std::move(j));
    }
    json msi = json::array();
    for (const auto& e : t.msi)
        msi.push_back({{"tick", e.tick},
                       {"pair", e.pair},
                       {"bit", e.bit},
                       {"kind", to_string(e.kind)},
                       {"resolved", e.resolved ? 1 : 0}});
    json j = {{"end_tick", t.end_tick}, {"edges", t.edges}, {"verdicts", verdicts}, {"msi", msi}};
    if (waves) {
        json w = json::object();
        for (NetId n = 0; n < nl.nets.size(); ++n) {
            if (nl.nets[n].name.find('$') != std::string::npos) continue;
            json ch = json::array();
            for (const auto& c : t.waves[n]) ch.push_back({c.tick, c.value});
            w[nl.nets[n].name] = ch;
        }
        j["waves"] = w;
    }
    return j;
}

} // namespace cdcv
