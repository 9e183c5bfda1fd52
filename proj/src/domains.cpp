#include "cdcv/domains.hpp"

#include <algorithm>
#include <tuple>

#include "cdcv/error.hpp"

namespace cdcv {

namespace {

bool cone_has(const Cone& c, const Endpoint& e) {
    return e.kind == Endpoint::Kind::Flop ? c.sequential.count(e.index) > 0 : c.ports.count(e.index) > 0;
}

// Comb cells lying on some path from `src` into `pin_net`, in dependency order.
std::vector<CellId> path_cells(const Netlist& nl, ConeCache& cache, const std::vector<std::size_t>& rank,
                               NetId pin_net, const Endpoint& src) {
    std::vector<CellId> out;
    for (CellId g : cache.cone(pin_net)->comb)
        if (cone_has(*cache.cone(nl.cells[g].output), src)) out.push_back(g);
    std::sort(out.begin(), out.end(), [&](CellId a, CellId b) { return rank[a] < rank[b]; });
    return out;
}

std::vector<std::size_t> comb_rank(const Netlist& nl) {
    std::vector<std::size_t> rank(nl.cells.size(), 0);
    auto order = comb_order(nl);
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    return rank;
}

bool names_cell(const Netlist& nl, CellId c, const std::string& name) {
    return nl.cells[c].name == name || names_net(nl, nl.cells[c].output, name);
}

} // namespace

bool names_net(const Netlist& nl, NetId net, const std::string& name) {
    const Net& n = nl.nets[net];
    if (n.name == name) return true;
    if (std::find(n.aliases.begin(), n.aliases.end(), name) != n.aliases.end()) return true;
    return n.driver.kind == DriverKind::Cell && nl.cells[n.driver.index].name == name;
}

std::string endpoint_name(const Netlist& nl, const Endpoint& e) {
    return e.kind == Endpoint::Kind::Flop ? nl.cells[e.index].name : nl.ports[e.index].name;
}

NetId endpoint_net(const Netlist& nl, const Endpoint& e) {
    return e.kind == Endpoint::Kind::Flop ? nl.cells[e.index].output : nl.ports[e.index].net;
}

DomainMap assign_domains(const Netlist& nl, const ConstraintSet& cs) {
    DomainMap dm;
    std::map<PortId, const ClockSpec*> clock_port;
    for (PortId p = 0; p < nl.ports.size(); ++p) {
        const Port& port = nl.ports[p];
        if (port.dir != PortDir::In) continue;
        if (const ClockSpec* c = cs.find_clock(port.name)) {
            clock_port[p] = c;
            dm.port_domain[p] = c->domain;
        } else if (const ResetDecl* r = cs.find_reset(port.name)) {
            dm.port_domain[p] = r->domain;
        }
    }

    ConeCache cache(nl);
    for (CellId id : nl.dffs()) {
        const Cell& c = nl.cells[id];
        auto cone = cache.cone(c.dff.clock);
        std::vector<const ClockSpec*> roots;
        for (PortId p : cone->ports)
            if (auto it = clock_port.find(p); it != clock_port.end()) roots.push_back(it->second);
        if (roots.empty())
            throw Error("UndeclaredClock", "clock of " + c.name + " (" + nl.nets[c.dff.clock].name +
                                               ") reaches no declared clock");
        std::set<std::string> doms;
        for (auto* r : roots) doms.insert(r->domain);
        if (doms.size() > 1)
            throw Error("MixedClockDomains", "clock of " + c.name + " mixes domains " + *doms.begin() + " and " +
                                                 *std::next(doms.begin()));
        std::sort(roots.begin(), roots.end(), [](auto* a, auto* b) { return a->name < b->name; });
        dm.flop_domain[id] = roots.front()->domain;
        dm.flop_clock[id] = roots.front()->name;
        dm.clock_nets[roots.front()->domain].insert(c.dff.clock);

        if (!cone->sequential.empty()) {
            std::string msg = "clock pin of " + c.name + " is reached from flop " +
                              nl.cells[*cone->sequential.begin()].name;
            if (cs.data_on_clock_is_error()) throw Error("DataOnClockPin", msg);
            dm.notes.push_back({"DataOnClockPin", c.name, msg});
        }
        ClockGate g{id, c.dff.clock, roots.front()->name, {}};
        for (CellId gc : cone->comb) {
            const Cell& gate = nl.cells[gc];
            if (gate.op != GateOp::Buf && gate.op != GateOp::Not && gate.op != GateOp::Slice) g.gates.push_back(gc);
        }
        if (!g.gates.empty()) dm.gated.push_back(std::move(g));
    }

    dm.net_domain.resize(nl.nets.size());
    for (NetId n = 0; n < nl.nets.size(); ++n) {
        auto cone = cache.cone(n);
        std::set<std::string> doms;
        bool unclocked = !cone->boxes.empty();
        for (CellId f : cone->sequential) doms.insert(dm.flop_domain.at(f));
        for (PortId p : cone->ports) {
            if (auto it = dm.port_domain.find(p); it != dm.port_domain.end())
                doms.insert(it->second);
            else
                unclocked = true;
        }
        NetDomain& nd = dm.net_domain[n];
        nd.domains.assign(doms.begin(), doms.end());
        if (doms.size() > 1)
            nd.kind = NetDomainKind::Mixed;
        else if (doms.size() == 1)
            nd.kind = NetDomainKind::Single;
        else
            nd.kind = unclocked ? NetDomainKind::Unclocked : NetDomainKind::Constant;
    }
    return dm;
}

std::vector<CdcPair> extract_cdc_pairs(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs) {
    ConeCache cache(nl);
    auto rank = comb_rank(nl);
    std::vector<CdcPair> out;
    for (CellId dst : nl.dffs()) {
        const Cell& d = nl.cells[dst];
        const std::string& dd = dm.domain_of(dst);
        std::vector<std::pair<PinKind, NetId>> pins{{PinKind::Data, d.dff.data}};
        if (d.dff.enable) pins.emplace_back(PinKind::Enable, *d.dff.enable);
        for (auto [pin, net] : pins) {
            auto cone = cache.cone(net);
            std::vector<Endpoint> srcs;
            for (CellId s : cone->sequential)
                if (dm.domain_of(s) != dd) srcs.push_back({Endpoint::Kind::Flop, s});
            for (PortId p : cone->ports)
                if (auto it = dm.port_domain.find(p); it != dm.port_domain.end() && it->second != dd)
                    srcs.push_back({Endpoint::Kind::Port, p});
            for (const Endpoint& s : srcs) {
                CdcPair pr;
                pr.src = s;
                pr.dst = dst;
                pr.pin = pin;
                pr.src_name = endpoint_name(nl, s);
                pr.dst_name = d.name;
                pr.src_net = endpoint_net(nl, s);
                pr.pin_net = net;
                pr.src_domain = s.kind == Endpoint::Kind::Flop ? dm.domain_of(s.index) : dm.port_domain.at(s.index);
                pr.dst_domain = dd;
                pr.path = path_cells(nl, cache, rank, net, s);
                pr.width = nl.nets[pr.src_net].width;
                pr.id = pr.src_name + "->" + pr.dst_name + (pin == PinKind::Enable ? ":en" : "");
                for (const auto& fp : cs.false_paths) {
                    bool from = s.kind == Endpoint::Kind::Flop ? names_cell(nl, s.index, fp.from)
                                                               : names_net(nl, pr.src_net, fp.from);
                    if (from && names_cell(nl, dst, fp.to)) pr.suppressed = "false_path";
                }
                if (!pr.suppressed)
                    for (const auto& st : cs.static_signals)
                        if (names_net(nl, pr.src_net, st)) pr.suppressed = "static";
                out.push_back(std::move(pr));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CdcPair& a, const CdcPair& b) { return a.id < b.id; });
    return out;
}

std::vector<RdcPair> extract_rdc_pairs(const Netlist& nl, const DomainMap& dm, const ConstraintSet&) {
    ConeCache cache(nl);
    auto rank = comb_rank(nl);
    std::vector<RdcPair> out;
    for (CellId dst : nl.dffs()) {
        const Cell& d = nl.cells[dst];
        if (!d.dff.reset) continue;
        const std::string& dd = dm.domain_of(dst);
        NetId net = *d.dff.reset;
        auto cone = cache.cone(net);
        std::vector<Endpoint> srcs;
        for (CellId s : cone->sequential)
            if (dm.domain_of(s) != dd) srcs.push_back({Endpoint::Kind::Flop, s});
        for (PortId p : cone->ports)
            if (auto it = dm.port_domain.find(p); it != dm.port_domain.end() && it->second != dd)
                srcs.push_back({Endpoint::Kind::Port, p});
        for (const Endpoint& s : srcs) {
            RdcPair pr;
            pr.src = s;
            pr.dst = dst;
            pr.src_name = endpoint_name(nl, s);
            pr.dst_name = d.name;
            pr.src_domain = s.kind == Endpoint::Kind::Flop ? dm.domain_of(s.index) : dm.port_domain.at(s.index);
            pr.dst_domain = dd;
            pr.path = path_cells(nl, cache, rank, net, s);
            pr.id = pr.src_name + "->" + pr.dst_name + ":rst";
            out.push_back(std::move(pr));
        }
    }
    std::sort(out.begin(), out.end(), [](const RdcPair& a, const RdcPair& b) { return a.id < b.id; });
    return out;
}

std::vector<UnclockedCrossing> extract_unclocked(const Netlist& nl, const DomainMap& dm) {
    ConeCache cache(nl);
    std::vector<UnclockedCrossing> out;
    for (CellId dst : nl.dffs()) {
        const Cell& d = nl.cells[dst];
        std::vector<std::pair<PinKind, NetId>> pins{{PinKind::Data, d.dff.data}};
        if (d.dff.enable) pins.emplace_back(PinKind::Enable, *d.dff.enable);
        if (d.dff.reset) pins.emplace_back(PinKind::Reset, *d.dff.reset);
        for (auto [pin, net] : pins) {
            auto cone = cache.cone(net);
            for (PortId p : cone->ports)
                if (!dm.port_domain.count(p)) out.push_back({nl.ports[p].name, d.name, pin});
            for (auto b : cone->boxes) out.push_back({nl.instances[b].path, d.name, pin});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source, a.dst_name, a.pin) < std::tie(b.source, b.dst_name, b.pin);
    });
    return out;
}

nlohmann::json pairs_to_json(const Netlist& nl, const std::vector<CdcPair>& pairs, const std::vector<RdcPair>& rdc,
                             const std::vector<UnclockedCrossing>& unclocked) {
    using nlohmann::json;
    json cdc = json::array();
    for (const auto& p : pairs) {
        json path = json::array();
        for (CellId c : p.path) path.push_back(nl.cells[c].name);
        json j = {{"id", p.id},
                  {"src", p.src_name},
                  {"src_kind", p.src.kind == Endpoint::Kind::Flop ? "flop" : "port"},
                  {"dst", p.dst_name},
                  {"pin", to_string(p.pin)},
                  {"src_domain", p.src_domain},
                  {"dst_domain", p.dst_domain},
                  {"width", p.width},
                  {"path", path}};
        if (p.suppressed) j["suppressed"] = *p.suppressed;
        cdc.push_back(std::move(j));
    }
    json r = json::array();
    for (const auto& p : rdc) {
        json path = json::array();
        for (CellId c : p.path) path.push_back(nl.cells[c].name);
        r.push_back({{"id", p.id},
                     {"src", p.src_name},
                     {"dst", p.dst_name},
                     {"src_domain", p.src_domain},
                     {"dst_domain", p.dst_domain},
                     {"path", path}});
    }
    json u = json::array();
    for (const auto& x : unclocked) u.push_back({{"source", x.source}, {"dst", x.dst_name}, {"pin", to_string(x.pin)}});
    return {{"cdc", cdc}, {"rdc", r}, {"unclocked", u}};
}

} // namespace cdcv
