#pragma once

// Random multi-clock designs and a brute-force crossing oracle, shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cdcv/domains.hpp"
#include "cdcv/netlist.hpp"

namespace cdcv::testing {

struct RandomDesign {
    std::string rtl;
    std::string constraints;
    unsigned domains = 0;
};

/// 1-bit design: up to 3 clocks, declared reset ports used as plain data,
/// undeclared data inputs, gates over earlier signals, optional enables.
inline RandomDesign random_design(std::mt19937_64& rng, unsigned max_cells = 100) {
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    RandomDesign d;
    d.domains = 1 + pick(3);
    std::ostringstream cs, hdr, body;
    std::vector<std::string> leaves; // signals usable as operands
    hdr << "module top(";
    const std::int64_t periods[] = {3, 4, 7, 10, 11};
    std::vector<std::int64_t> ps(std::begin(periods), std::end(periods));
    std::shuffle(ps.begin(), ps.end(), rng);
    for (unsigned i = 0; i < d.domains; ++i) {
        hdr << "input clk" << i << ", ";
        cs << "clock clk" << i << " -period " << ps[i] << " -domain D" << i << "\n";
        if (rng() % 2) {
            hdr << "input rst" << i << ", ";
            cs << "reset rst" << i << " -domain D" << i << "\n";
            leaves.push_back("rst" + std::to_string(i));
        }
    }
    for (unsigned i = 0; i < 3; ++i) {
        hdr << "input in" << i << ", ";
        leaves.push_back("in" + std::to_string(i));
    }
    unsigned flops = 4 + pick(std::min<unsigned>(22, max_cells / 4));
    std::vector<unsigned> dom(flops);
    for (unsigned f = 0; f < flops; ++f) {
        dom[f] = f < d.domains ? f : pick(d.domains);
        body << "  reg q" << f << ";\n";
        leaves.push_back("q" + std::to_string(f));
    }
    unsigned gates = pick(max_cells - flops);
    for (unsigned g = 0; g < gates; ++g) {
        auto op = [&] { return leaves[pick(leaves.size())]; };
        std::string e;
        switch (pick(5)) {
        case 0: e = op() + " & " + op(); break;
        case 1: e = op() + " | " + op(); break;
        case 2: e = op() + " ^ " + op(); break;
        case 3: e = "~" + op(); break;
        default: e = op() + " ? " + op() + " : " + op(); break;
        }
        body << "  wire w" << g << " = " << e << ";\n";
        leaves.push_back("w" + std::to_string(g));
    }
    for (unsigned f = 0; f < flops; ++f) {
        std::string src = leaves[pick(leaves.size())];
        if (src == "q" + std::to_string(f)) src = "in0";
        body << "  always @(posedge clk" << dom[f] << ") ";
        if (rng() % 10 < 3) body << "if (" << leaves[pick(leaves.size())] << ") ";
        body << "q" << f << " <= " << src << ";\n";
    }
    hdr << "output y);\n";
    body << "  assign y = q" << flops - 1 << ";\nendmodule\n";
    d.rtl = hdr.str() + body.str();
    d.constraints = cs.str();
    return d;
}

/// (source name, destination flop name, pin)
using PairKey = std::tuple<std::string, std::string, PinKind>;

/// Every cross-domain source reaching a flop's data or enable pin, by
/// enumerating each combinational path explicitly. Flop domains come straight
/// from the clock port names, independent of the domain analysis.
inline std::set<PairKey> brute_force_pairs(const Netlist& nl, const ConstraintSet& cs) {
    auto clock_domain = [&](NetId clk) -> std::string {
        for (const auto& c : cs.clocks)
            if (nl.nets[clk].name == c.name) return c.domain;
        return "";
    };
    auto port_domain = [&](PortId p) -> std::string {
        if (const auto* r = cs.find_reset(nl.ports[p].name)) return r->domain;
        if (const auto* c = cs.find_clock(nl.ports[p].name)) return c->domain;
        return "";
    };
    std::set<PairKey> out;
    for (CellId dst = 0; dst < nl.cells.size(); ++dst) {
        const Cell& c = nl.cells[dst];
        if (!c.is_dff()) continue;
        std::string dd = clock_domain(c.dff.clock);
        std::vector<std::pair<NetId, PinKind>> pins{{c.dff.data, PinKind::Data}};
        if (c.dff.enable) pins.emplace_back(*c.dff.enable, PinKind::Enable);
        for (auto [net, pin] : pins) {
            std::vector<NetId> stack; // current path, for cycle safety
            std::function<void(NetId)> walk = [&](NetId n) {
                for (NetId s : stack)
                    if (s == n) return;
                const Driver& drv = nl.nets[n].driver;
                if (drv.kind == DriverKind::InputPort) {
                    std::string sd = port_domain(drv.index);
                    if (!sd.empty() && sd != dd) out.emplace(nl.ports[drv.index].name, c.name, pin);
                    return;
                }
                if (drv.kind != DriverKind::Cell) return;
                const Cell& sc = nl.cells[drv.index];
                if (sc.is_dff()) {
                    std::string sd = clock_domain(sc.dff.clock);
                    if (sd != dd) out.emplace(sc.name, c.name, pin);
                    return;
                }
                if (!sc.is_gate()) return;
                stack.push_back(n);
                for (NetId in : sc.inputs) walk(in);
                stack.pop_back();
            };
            walk(net);
        }
    }
    return out;
}

inline std::set<PairKey> extracted_pairs(const std::vector<CdcPair>& pairs) {
    std::set<PairKey> out;
    for (const auto& p : pairs) out.emplace(p.src_name, p.dst_name, p.pin);
    return out;
}

} // namespace cdcv::testing
