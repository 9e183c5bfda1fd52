#include "cdcv/rules.hpp"

#include <algorithm>
#include <functional>
#include <future>
#include <tuple>

namespace cdcv {

const std::vector<std::string>& rule_catalog() {
    static const std::vector<std::string> k = {"MISSING_SYNC",      "COMB_ON_CDC", "MISSING_RDC_SYNC",
                                               "COMB_ON_RDC",       "RESET_CONVERGENCE", "CONVERGENCE",
                                               "DIVERGENCE",        "STATIC_NOT_CONSTRAINED", "GATED_CLOCK_GLITCH",
                                               "BLACKBOX_BOUNDARY"};
    return k;
}

Severity default_severity(const std::string& rule) {
    if (rule == "CONVERGENCE" || rule == "DIVERGENCE" || rule == "GATED_CLOCK_GLITCH" || rule == "BLACKBOX_BOUNDARY")
        return Severity::Warning;
    if (rule == "STATIC_NOT_CONSTRAINED") return Severity::Info;
    return Severity::Error;
}

Analysis analyze(Netlist nl, const ConstraintSet& cs) {
    Analysis a{std::move(nl), cs, {}, {}, {}, {}, {}};
    a.domains = assign_domains(a.netlist, cs);
    a.pairs = extract_cdc_pairs(a.netlist, a.domains, cs);
    a.rdc = extract_rdc_pairs(a.netlist, a.domains, cs);
    a.unclocked = extract_unclocked(a.netlist, a.domains);
    a.syncs = recognize_synchronizers(a.netlist, a.domains, cs, a.pairs, a.rdc);
    return a;
}

namespace {

using Findings = std::vector<Finding>;

struct Ctx {
    const Analysis& a;
    const Netlist& nl;
    mutable ConeCache cache;

    explicit Ctx(const Analysis& an) : a(an), nl(an.netlist), cache(an.netlist) {}

    Finding make(const std::string& rule, const std::string& subject) const {
        Finding f;
        f.rule = rule;
        f.severity = a.constraints.severity_override(rule).value_or(default_severity(rule));
        f.subject = subject;
        return f;
    }
    std::vector<std::string> path_witness(const std::string& src, const std::vector<CellId>& path,
                                          const std::string& dst) const {
        std::vector<std::string> w{src};
        for (CellId c : path) w.push_back(nl.cells[c].name);
        w.push_back(dst);
        return w;
    }
    bool multi_input(CellId c) const { return nl.cells[c].is_gate() && nl.cells[c].inputs.size() > 1; }
};

Findings missing_sync(const Ctx& x) {
    Findings out;
    for (const auto& p : x.a.pairs) {
        if (p.suppressed || x.a.syncs.classes.at(p.id).status != PairStatus::Unsynchronized) continue;
        if (x.a.syncs.entry_of(p.dst)) continue; // reported as COMB_ON_CDC
        Finding f = x.make("MISSING_SYNC", p.dst_name);
        f.pairs = {p.id};
        f.witness = x.path_witness(p.src_name, p.path, p.dst_name);
        f.message = p.src_domain + " -> " + p.dst_domain + " crossing from " + p.src_name + " into " + p.dst_name +
                    " has no synchronizer";
        out.push_back(std::move(f));
    }
    return out;
}

Findings comb_on_cdc(const Ctx& x) {
    Findings out;
    for (const auto& p : x.a.pairs) {
        if (p.suppressed) continue;
        const SyncInstance* s = x.a.syncs.entry_of(p.dst);
        std::vector<std::string> bad;
        for (CellId c : p.path)
            if (x.multi_input(c) && !(s && s->allowed.count(c))) bad.push_back(x.nl.cells[c].name);
        if (bad.empty()) continue;
        Finding f = x.make("COMB_ON_CDC", p.dst_name);
        f.pairs = {p.id};
        if (s) f.syncs = {s->id};
        f.witness = x.path_witness(p.src_name, p.path, p.dst_name);
        f.message = "combinational logic (" + bad.front() + (bad.size() > 1 ? ", ..." : "") + ") on crossing " + p.id;
        out.push_back(std::move(f));
    }
    return out;
}

// Declared reset ports and reset-synchronizer outputs feeding `net`, with domains.
std::vector<std::pair<std::string, std::string>> reset_sources(const Ctx& x, NetId net) {
    std::vector<std::pair<std::string, std::string>> src;
    auto cone = x.cache.cone(net);
    for (PortId p : cone->ports)
        if (const ResetDecl* r = x.a.constraints.find_reset(x.nl.ports[p].name))
            src.emplace_back(x.nl.ports[p].name, r->domain);
    for (const auto& s : x.a.syncs.syncs)
        if (s.reset_sync && cone->sequential.count(s.chain.back()))
            src.emplace_back(x.nl.cells[s.chain.back()].name, s.dst_domain);
    std::sort(src.begin(), src.end());
    return src;
}

bool merges_domains(const std::vector<std::pair<std::string, std::string>>& src) {
    for (const auto& s : src)
        if (s.second != src.front().second) return true;
    return false;
}

Findings missing_rdc_sync(const Ctx& x) {
    Findings out;
    for (const auto& r : x.a.rdc) {
        bool prot = false;
        for (const auto& s : x.a.syncs.syncs)
            if (std::find(s.protected_rdc.begin(), s.protected_rdc.end(), r.id) != s.protected_rdc.end()) prot = true;
        if (prot) continue;
        Finding f = x.make("MISSING_RDC_SYNC", r.dst_name);
        f.pairs = {r.id};
        f.witness = x.path_witness(r.src_name, r.path, r.dst_name);
        f.message = "reset from " + r.src_domain + " reaches " + r.dst_name + " (" + r.dst_domain +
                    ") without a reset synchronizer";
        out.push_back(std::move(f));
    }
    return out;
}

Findings comb_on_rdc(const Ctx& x) {
    Findings out;
    for (const auto& r : x.a.rdc) {
        std::vector<std::string> bad;
        for (CellId c : r.path) {
            if (!x.multi_input(c)) continue;
            // Gates merging resets of different domains are RESET_CONVERGENCE.
            if (merges_domains(reset_sources(x, x.nl.cells[c].output))) continue;
            bad.push_back(x.nl.cells[c].name);
        }
        if (bad.empty()) continue;
        Finding f = x.make("COMB_ON_RDC", r.dst_name);
        f.pairs = {r.id};
        f.witness = x.path_witness(r.src_name, r.path, r.dst_name);
        f.message = "combinational logic (" + bad.front() + ") on reset crossing " + r.id;
        out.push_back(std::move(f));
    }
    return out;
}

Findings reset_convergence(const Ctx& x) {
    Findings out;
    std::set<NetId> seen;
    for (CellId d : x.nl.dffs()) {
        const Cell& c = x.nl.cells[d];
        if (!c.dff.reset || !seen.insert(*c.dff.reset).second) continue;
        auto src = reset_sources(x, *c.dff.reset);
        if (!merges_domains(src)) continue;
        Finding f = x.make("RESET_CONVERGENCE", x.nl.nets[*c.dff.reset].name);
        std::string doms;
        for (const auto& s : src) {
            f.witness.push_back(s.first);
            doms += (doms.empty() ? "" : ", ") + s.second;
        }
        for (CellId g : x.cache.cone(*c.dff.reset)->comb)
            if (x.multi_input(g)) f.witness.push_back(x.nl.cells[g].name);
        for (const auto& r : x.a.rdc)
            if (x.nl.cells[r.dst].dff.reset == c.dff.reset) f.pairs.push_back(r.id);
        f.message = "resets from domains " + doms + " merge before " + x.nl.nets[*c.dff.reset].name;
        out.push_back(std::move(f));
    }
    return out;
}

Findings convergence(const Ctx& x) {
    Findings out;
    std::map<CellId, const SyncInstance*> out_of;
    for (const auto& s : x.a.syncs.syncs)
        for (CellId o : s.outputs) out_of[o] = &s;
    auto src_domains = [&](const SyncInstance& s) {
        std::set<std::string> d;
        for (const auto& p : x.a.pairs)
            if (std::find(s.protected_pairs.begin(), s.protected_pairs.end(), p.id) != s.protected_pairs.end())
                d.insert(p.src_domain);
        return d;
    };
    auto check = [&](NetId net, const std::string& subject) {
        std::set<const SyncInstance*> hit;
        for (CellId f : x.cache.cone(net)->sequential)
            if (auto it = out_of.find(f); it != out_of.end()) hit.insert(it->second);
        if (hit.size() < 2) return;
        std::map<std::string, std::set<std::string>> by_dom;
        for (const SyncInstance* s : hit)
            for (const auto& d : src_domains(*s)) by_dom[d].insert(s->id);
        for (const auto& [dom, ids] : by_dom) {
            if (ids.size() < 2) continue;
            Finding f = x.make("CONVERGENCE", subject);
            f.syncs.assign(ids.begin(), ids.end());
            for (const auto& id : ids) {
                const SyncInstance* s = x.a.syncs.find(id);
                for (CellId o : s->outputs)
                    if (x.cache.cone(net)->sequential.count(o)) f.witness.push_back(x.nl.cells[o].name);
            }
            f.witness.push_back(subject);
            f.message = "signals synchronized from " + dom + " by separate synchronizers converge at " + subject;
            out.push_back(std::move(f));
        }
    };
    for (CellId d : x.nl.dffs()) {
        const Cell& c = x.nl.cells[d];
        check(c.dff.data, c.name);
        if (c.dff.enable) check(*c.dff.enable, c.name);
    }
    for (const auto& p : x.nl.ports)
        if (p.dir == PortDir::Out) check(p.net, p.name);
    return out;
}

Findings divergence(const Ctx& x) {
    Findings out;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> groups;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> pair_ids;
    for (const auto& p : x.a.pairs) {
        const auto& cl = x.a.syncs.classes.at(p.id);
        if (cl.status != PairStatus::Synchronized) continue;
        groups[{p.src_name, p.dst_domain}].insert(cl.sync_id);
        pair_ids[{p.src_name, p.dst_domain}].push_back(p.id);
    }
    for (const auto& [key, ids] : groups) {
        if (ids.size() < 2) continue;
        Finding f = x.make("DIVERGENCE", key.first);
        f.syncs.assign(ids.begin(), ids.end());
        f.pairs = pair_ids[key];
        f.witness.push_back(key.first);
        for (const auto& id : ids) f.witness.push_back(x.nl.cells[x.a.syncs.find(id)->entries.front()].name);
        f.message = key.first + " enters " + key.second + " through " + std::to_string(ids.size()) + " synchronizers";
        out.push_back(std::move(f));
    }
    return out;
}

Findings static_not_constrained(const Ctx& x) {
    Findings out;
    std::set<CellId> seen;
    for (const auto& p : x.a.pairs) {
        if (p.suppressed || p.src.kind != Endpoint::Kind::Flop) continue;
        if (x.a.syncs.classes.at(p.id).status != PairStatus::Unsynchronized) continue;
        const Cell& s = x.nl.cells[p.src.index];
        std::vector<NetId> nets{s.dff.data};
        if (s.dff.enable) nets.push_back(*s.dff.enable);
        bool constant = true;
        for (NetId n : nets) {
            auto cone = x.cache.cone(n);
            if (!cone->ports.empty() || !cone->boxes.empty()) constant = false;
            for (CellId f : cone->sequential)
                if (f != p.src.index) constant = false;
        }
        if (!constant || !seen.insert(p.src.index).second) continue;
        Finding f = x.make("STATIC_NOT_CONSTRAINED", s.name);
        f.pairs = {p.id};
        f.witness = {s.name};
        f.message = s.name + " holds its reset value but is not declared static";
        out.push_back(std::move(f));
    }
    return out;
}

struct Chased {
    std::optional<PortId> port;
    std::optional<CellId> flop;
    bool inverted = false;
};

// Follow buffers and inverters back to a port or flop.
Chased chase_inverters(const Netlist& nl, NetId n) {
    Chased c;
    for (;;) {
        const Driver& d = nl.nets[n].driver;
        if (d.kind == DriverKind::InputPort) {
            c.port = d.index;
            return c;
        }
        if (d.kind != DriverKind::Cell) return c;
        const Cell& cell = nl.cells[d.index];
        if (cell.is_dff()) {
            c.flop = d.index;
            return c;
        }
        if (!cell.is_gate() || (cell.op != GateOp::Buf && cell.op != GateOp::Not)) return c;
        if (cell.op == GateOp::Not) c.inverted = !c.inverted;
        n = cell.inputs[0];
    }
}

Findings gated_clock(const Ctx& x) {
    Findings out;
    std::set<NetId> seen;
    for (const auto& g : x.a.domains.gated) {
        if (!seen.insert(g.clock_net).second) continue;
        bool idiom = false;
        if (g.gates.size() == 1) {
            const Cell& gate = x.nl.cells[g.gates[0]];
            if ((gate.op == GateOp::And || gate.op == GateOp::Or) && gate.inputs.size() == 2) {
                for (int k = 0; k < 2; ++k) {
                    auto clk = chase_inverters(x.nl, gate.inputs[k]);
                    auto en = chase_inverters(x.nl, gate.inputs[1 - k]);
                    if (!clk.port || clk.inverted || en.port || !en.flop) continue;
                    auto en_clk = chase_inverters(x.nl, x.nl.cells[*en.flop].dff.clock);
                    if (en_clk.port != clk.port) continue;
                    // AND gating needs the enable to settle while the clock is low.
                    if (en_clk.inverted == (gate.op == GateOp::And)) idiom = true;
                }
            }
        }
        if (idiom) continue;
        Finding f = x.make("GATED_CLOCK_GLITCH", x.nl.nets[g.clock_net].name);
        for (CellId c : g.gates) f.witness.push_back(x.nl.cells[c].name);
        f.message = "clock " + g.root_clock + " is gated by logic that is not a registered-enable gate";
        out.push_back(std::move(f));
    }
    return out;
}

Findings blackbox(const Ctx& x) {
    Findings out;
    for (const auto& inst : x.nl.instances) {
        if (!inst.black_box) continue;
        Finding f = x.make("BLACKBOX_BOUNDARY", inst.path);
        for (NetId n : inst.outputs) f.witness.push_back(x.nl.nets[n].name);
        if (f.witness.empty()) f.witness.push_back(inst.path);
        f.message = "instance " + inst.path + " of undefined module " + inst.module +
                    "; its outputs are treated as unclocked";
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace

std::vector<Finding> run_rules(const Analysis& a) {
    // Cone caches are per rule so the passes share nothing mutable.
    std::vector<std::function<Findings(const Ctx&)>> passes = {
        missing_sync, comb_on_cdc, missing_rdc_sync, comb_on_rdc,  reset_convergence,
        convergence,  divergence,  static_not_constrained, gated_clock, blackbox};
    std::vector<std::future<Findings>> futs;
    for (auto& pass : passes)
        futs.push_back(std::async(std::launch::async, [&a, pass] {
            Ctx x(a);
            return pass(x);
        }));
    std::vector<Finding> out;
    for (auto& f : futs) {
        auto v = f.get();
        out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    std::stable_sort(out.begin(), out.end(), [](const Finding& l, const Finding& r) {
        return std::tie(l.rule, l.subject, l.witness) < std::tie(r.rule, r.subject, r.witness);
    });
    return out;
}

nlohmann::json findings_to_json(const std::vector<Finding>& fs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fs)
        arr.push_back({{"rule", f.rule},
                       {"severity", to_string(f.severity)},
                       {"subject", f.subject},
                       {"pairs", f.pairs},
                       {"syncs", f.syncs},
                       {"witness", f.witness},
                       {"message", f.message}});
    return arr;
}

} // namespace cdcv
