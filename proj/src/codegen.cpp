#include "cdcv/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "cdcv/error.hpp"
#include "cdcv/sim.hpp"

namespace cdcv {

std::string sv_ident(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '_');
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) s.insert(s.begin(), '_');
    return s;
}

std::vector<std::string> property_names(const CheckerSpec& c) {
    std::string base = "p_" + sv_ident(c.name());
    if (c.kind == CheckerSpec::Kind::Fifo) return {base + "_full", base + "_empty"};
    if (c.kind == CheckerSpec::Kind::Latency) return {};
    return {base};
}

namespace {

const char* kHeader = "// generated-by cdcv " CDCV_VERSION "\n";

// Design-side name usable in a bind connection: the canonical name, or the
// first alias without a '$' temporary marker.
std::string design_name(const Netlist& nl, NetId n) {
    const Net& net = nl.nets[n];
    if (net.name.find('$') == std::string::npos) return net.name;
    std::vector<std::string> al = net.aliases;
    std::sort(al.begin(), al.end());
    for (const auto& x : al)
        if (x.find('$') == std::string::npos) return x;
    throw Error("UnresolvedSignal", "net '" + net.name + "' has no name usable in generated code");
}

class Module {
public:
    Module(const Netlist& nl, std::string name) : nl_(nl), name_(std::move(name)) {}

    std::string port(NetId n) {
        std::string sig = design_name(nl_, n);
        std::string id = sv_ident(sig);
        auto [it, fresh] = ports_.try_emplace(id, Port{sig, nl_.nets[n].width});
        if (!fresh && it->second.signal != sig)
            throw Error("NameCollision", "signals '" + it->second.signal + "' and '" + sig + "' both map to port " +
                                             id + " in " + name_);
        return id;
    }
    std::string clock(const Analysis& a, const std::string& clk) {
        auto n = a.netlist.find_net(clk);
        if (!n) throw Error("UnresolvedSignal", "clock '" + clk + "' has no net");
        return port(*n);
    }
    // A hook port with no design-side signal.
    std::string hook(const std::string& id, unsigned width) {
        auto [it, fresh] = ports_.try_emplace(id, Port{"", width});
        if (!fresh) throw Error("NameCollision", "port " + id + " declared twice in " + name_);
        return id;
    }
    std::ostringstream body;

    std::string text(const std::string& comment) const {
        std::ostringstream os;
        os << kHeader << comment << "module " << name_;
        if (ports_.empty()) {
            os << " ();\n";
        } else {
            os << " (\n";
            std::size_t i = 0;
            for (const auto& [id, p] : ports_) {
                os << "    input logic ";
                if (p.width > 1) os << "[" << p.width - 1 << ":0] ";
                os << id << (++i < ports_.size() ? ",\n" : "\n");
            }
            os << ");\n";
        }
        os << body.str() << "\nendmodule\n";
        return os.str();
    }
    std::vector<std::pair<std::string, std::string>> binds() const {
        std::vector<std::pair<std::string, std::string>> b;
        for (const auto& [id, p] : ports_)
            if (!p.signal.empty()) b.emplace_back(id, p.signal);
        return b;
    }
    const std::string& name() const { return name_; }

private:
    struct Port {
        std::string signal;
        unsigned width = 1;
    };
    const Netlist& nl_;
    std::string name_;
    std::map<std::string, Port> ports_;
};

std::string bit(const std::string& s, unsigned width) { return width > 1 ? s + "[0]" : s; }

void emit_property(Module& m, const std::string& name, const std::string& clk, const std::string& disable,
                   const std::string& expr) {
    std::string label = "a_" + name.substr(2);
    m.body << "\n    property " << name << ";\n        @(posedge " << clk << ")";
    if (!disable.empty()) m.body << " disable iff (" << disable << ")";
    m.body << " " << expr << ";\n    endproperty\n    " << label << ": assert property (" << name << ");\n";
}

void emit_checker(Module& m, const Analysis& a, const CheckerSpec& spec) {
    using K = CheckerSpec::Kind;
    const Netlist& nl = a.netlist;
    ResolvedChecker rc = resolve_checker(a, spec);
    auto names = property_names(spec);
    switch (spec.kind) {
    case K::Stability: {
        std::string clk = m.clock(a, rc.clock), s = m.port(rc.sig);
        std::string rhs;
        for (unsigned j = 1; j < rc.samples; ++j)
            rhs += (j > 1 ? " &&\n            " : "") + std::string("$stable($past(") + s + ", " + std::to_string(j) +
                   "))";
        emit_property(m, names[0], clk, "", "!$stable(" + s + ") |-> " + (rhs.empty() ? "1'b1" : rhs));
        break;
    }
    case K::GrayCode: {
        std::string clk = m.clock(a, rc.clock), s = m.port(rc.sig);
        unsigned w = nl.nets[rc.sig].width;
        std::string e;
        for (unsigned i = 0; i < w; ++i)
            for (unsigned j = i + 1; j < w; ++j) {
                if (!e.empty()) e += " &&\n            ";
                e += "!(!$stable(" + s + "[" + std::to_string(i) + "]) && !$stable(" + s + "[" + std::to_string(j) +
                     "]))";
            }
        emit_property(m, names[0], clk, "", e);
        break;
    }
    case K::PulseWidth: {
        std::string clk = m.clock(a, rc.clock);
        std::string p = bit(m.port(rc.sig), nl.nets[rc.sig].width);
        emit_property(m, names[0], clk, "", "$past(" + p + ") |-> !" + p);
        break;
    }
    case K::Static: {
        std::string clk = m.clock(a, rc.clock), s = m.port(rc.sig);
        std::string dis;
        for (auto [net, low] : rc.disable) {
            if (!dis.empty()) dis += " || ";
            std::string r = bit(m.port(net), nl.nets[net].width);
            dis += low ? "!" + r : r;
        }
        emit_property(m, names[0], clk, dis, "$stable(" + s + ")");
        break;
    }
    case K::MuxEnable: {
        std::string clk = m.clock(a, rc.clock);
        std::string sel = bit(m.port(rc.select), nl.nets[rc.select].width);
        std::string rhs;
        for (NetId d : rc.data) rhs += (rhs.empty() ? "" : " && ") + std::string("$stable(") + m.port(d) + ")";
        emit_property(m, names[0], clk, "", sel + " |-> " + rhs);
        break;
    }
    case K::Fifo: {
        std::string wclk = m.clock(a, rc.clock), rclk = m.clock(a, rc.rclock);
        std::string wp = m.port(rc.wptr), rq = m.port(rc.rq), rp = m.port(rc.rptr), wq = m.port(rc.wq);
        unsigned w = nl.nets[rc.wptr].width;
        // Full: the write pointer equals the synced read pointer with the two
        // MSBs inverted.
        std::string full = w <= 2 ? "~" + rq
                                  : "{~" + rq + "[" + std::to_string(w - 1) + ":" + std::to_string(w - 2) + "], " +
                                        rq + "[" + std::to_string(w - 3) + ":0]}";
        emit_property(m, names[0], wclk, "", "(" + wp + " == " + full + ") |=> $stable(" + wp + ")");
        emit_property(m, names[1], rclk, "", "(" + rp + " == " + wq + ") |=> $stable(" + rp + ")");
        break;
    }
    case K::Latency: break;
    }
}

const char* class_of(SyncKind k) {
    switch (k) {
    case SyncKind::Ndff:
    case SyncKind::UserDefined: return "ndff_sync_check";
    case SyncKind::PulseToggle: return "pulse_sync_check";
    case SyncKind::MuxEnable: return "mux_sync_check";
    case SyncKind::AsyncFifo: return "async_fifo_check";
    }
    return "?";
}

// Sync owning a default checker: the subject itself or the sync protecting
// the subject pair.
const SyncInstance* owner(const Analysis& a, const CheckerSpec& c) {
    if (const SyncInstance* s = a.syncs.find(c.subject)) return s;
    for (const auto& s : a.syncs.syncs)
        if (std::find(s.protected_pairs.begin(), s.protected_pairs.end(), c.subject) != s.protected_pairs.end())
            return &s;
    return nullptr;
}

} // namespace

std::vector<GeneratedFile> generate_checks(const Analysis& a) {
    using K = CheckerSpec::Kind;
    std::vector<CheckerSpec> checkers = default_checkers(a);
    std::vector<GeneratedFile> out;
    std::set<std::string> modules;

    for (const auto& s : a.syncs.syncs) {
        std::vector<CheckerSpec> mine;
        for (const auto& c : checkers)
            if (c.kind != K::Static && owner(a, c) == &s) mine.push_back(c);
        if (mine.empty()) continue;
        std::string inst = sv_ident(s.id);
        Module m(a.netlist, inst + "_checker");
        if (!modules.insert(m.name()).second)
            throw Error("NameCollision", "two synchronizers generate module " + m.name());
        for (const auto& c : mine) emit_checker(m, a, c);
        GeneratedFile f;
        f.generator = class_of(s.kind);
        f.path = "gen/checks/" + f.generator + "/" + inst + ".sv";
        f.sources.push_back(s.id);
        for (const auto& id : s.protected_pairs) f.sources.push_back(id);
        std::string comment = "// " + f.generator + " for " + s.id + "\n";
        for (const auto& id : s.protected_pairs) comment += "// protects " + id + "\n";
        f.text = m.text(comment);
        f.module = m.name();
        f.binds = m.binds();
        out.push_back(std::move(f));
    }

    const auto& cs = a.constraints;
    if (!cs.static_signals.empty() || !cs.false_paths.empty()) {
        Module m(a.netlist, "signal_config_checker");
        if (!modules.insert(m.name()).second) throw Error("NameCollision", "module " + m.name() + " generated twice");
        GeneratedFile f;
        f.generator = "signal_config_check";
        f.path = "gen/checks/signal_config_check/signal_config.sv";
        std::string comment = "// signal_config_check for declared static signals and false paths\n";
        for (const auto& fp : cs.false_paths) {
            comment += "// false_path -from " + fp.from + " -to " + fp.to + "\n";
            f.sources.push_back("false_path " + fp.from + " " + fp.to);
        }
        for (const auto& c : checkers)
            if (c.kind == K::Static) {
                emit_checker(m, a, c);
                f.sources.push_back("static " + c.subject);
            }
        f.text = m.text(comment);
        f.module = m.name();
        f.binds = m.binds();
        out.push_back(std::move(f));
    }
    return out;
}

GeneratedFile generate_coverage_model(const Analysis& a) {
    Module m(a.netlist, "cdc_cov");
    GeneratedFile f;
    f.generator = "coverage";
    f.path = "gen/coverage/cdc_cov.sv";
    std::set<std::string> groups;
    for (const auto& p : a.pairs) {
        if (p.suppressed) continue;
        const std::string& clk = a.domains.flop_clock.at(p.dst);
        std::string id = sv_ident(p.id);
        if (!groups.insert(id).second) throw Error("NameCollision", "two pairs map to covergroup cg_" + id);
        std::string c = m.clock(a, clk);
        std::string evt = m.hook(id + "_msi_evt", 1), bin = m.hook(id + "_msi_bin", 2);
        m.body << "\n    // " << p.id << "\n"
               << "    covergroup cg_" << id << " @(posedge " << c << ");\n"
               << "        option.per_instance = 1;\n"
               << "        cp_msi: coverpoint " << bin << " iff (" << evt << ") {\n"
               << "            bins setup_to_0 = {2'b00};\n"
               << "            bins setup_to_1 = {2'b01};\n"
               << "            bins hold_to_0 = {2'b10};\n"
               << "            bins hold_to_1 = {2'b11};\n"
               << "        }\n"
               << "    endgroup\n"
               << "    cg_" << id << " cg_" << id << "_inst = new();\n";
        f.sources.push_back(p.id);
    }
    f.text = m.text("// coverage: one covergroup per unsuppressed crossing\n"
                    "// <pair>_msi_bin is {hold, resolved value}, valid while <pair>_msi_evt is high\n");
    f.module = m.name();
    f.binds = m.binds();
    return f;
}

GeneratedFile generate_bind_all(const Analysis& a, const std::vector<GeneratedFile>& checks) {
    GeneratedFile f;
    f.generator = "bind";
    f.path = "gen/bind_all.sv";
    std::ostringstream os;
    os << kHeader;
    for (const auto& c : checks) {
        if (c.module.empty()) continue;
        os << "\nbind " << a.netlist.name << " " << c.module << " u_" << c.module;
        if (c.binds.empty()) {
            os << " ();\n";
        } else {
            os << " (\n";
            for (std::size_t i = 0; i < c.binds.size(); ++i)
                os << "    ." << c.binds[i].first << "(" << c.binds[i].second << ")"
                   << (i + 1 < c.binds.size() ? ",\n" : "\n");
            os << ");\n";
        }
        f.sources.push_back(c.module);
    }
    f.text = os.str();
    return f;
}

std::vector<GeneratedFile> generate_all(const Analysis& a) {
    std::vector<GeneratedFile> files = generate_checks(a);
    GeneratedFile cov = generate_coverage_model(a);
    if (!cov.sources.empty()) files.push_back(std::move(cov));
    if (!files.empty()) files.push_back(generate_bind_all(a, files));
    return files;
}

} // namespace cdcv
