#include "cdcv/elaborate.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>

#include "cdcv/error.hpp"

namespace cdcv {

namespace {

using rtl::Expr;
using rtl::ParsedModule;

using Slot = std::uint32_t;

// Cells are recorded against slots and mapped to nets once all port
// connections have been merged.
struct PendingCell {
    std::string name;
    CellKind kind;
    GateOp op = GateOp::Buf;
    std::vector<Slot> inputs;
    Slot output = 0;
    unsigned slice_msb = 0, slice_lsb = 0;
    std::uint64_t value = 0;
    // Dff
    Slot clock = 0, data = 0;
    std::optional<Slot> enable, reset;
    bool reset_active_low = true;
    std::uint64_t reset_value = 0;
};

struct PendingBox {
    std::string path;
    std::string module;
    std::vector<Slot> connected;
};

class Elaborator {
public:
    Elaborator(const std::vector<ParsedModule>& mods, ElaborateOptions opts) : opts_(opts) {
        for (const auto& m : mods) modules_.emplace(m.name, &m);
    }

    Netlist run(const std::string& top) {
        auto it = modules_.find(top);
        if (it == modules_.end()) throw Error("UnknownTop", "no module named '" + top + "'");
        std::vector<std::string> stack;
        expand(*it->second, "", stack, true);
        return finish(top);
    }

private:
    Slot new_slot(const std::string& name, unsigned width, bool temp) {
        if (width == 0 || width > kMaxWidth) throw Error("BadWidth", name);
        names_.push_back(name);
        widths_.push_back(width);
        temp_.push_back(temp);
        parent_.push_back(static_cast<Slot>(parent_.size()));
        return static_cast<Slot>(parent_.size() - 1);
    }

    Slot find(Slot s) {
        while (parent_[s] != s) {
            parent_[s] = parent_[parent_[s]];
            s = parent_[s];
        }
        return s;
    }

    void unite(Slot a, Slot b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

    [[noreturn]] static void fail(const char* code, const ParsedModule& m, int line, const std::string& msg) {
        throw Error(code, m.origin + ":" + std::to_string(line) + ": " + msg);
    }

    struct Scope {
        const ParsedModule* module;
        std::string prefix;
        std::map<std::string, Slot> symbols;
        std::map<std::string, unsigned> temp_counter;
    };

    std::string temp_name(Scope& sc, const std::string& target, const char* kind) {
        unsigned k = sc.temp_counter[target]++;
        return sc.prefix + target + "$" + kind + std::to_string(k);
    }

    // Width of an expression when it does not depend on context; -1 for
    // unsized literals (and operators whose operands are all unsized).
    int self_width(const Scope& sc, const Expr& e) {
        switch (e.kind) {
        case Expr::Kind::Ident: return static_cast<int>(widths_[sc.symbols.at(e.name)]);
        case Expr::Kind::Index: return 1;
        case Expr::Kind::Slice: return static_cast<int>(e.msb - e.lsb + 1);
        case Expr::Kind::Number: return e.width;
        case Expr::Kind::Not:
        case Expr::Kind::LogicNot: return self_width(sc, e.args[0]);
        case Expr::Kind::And:
        case Expr::Kind::Or:
        case Expr::Kind::Xor:
            for (const auto& a : e.args)
                if (int w = self_width(sc, a); w >= 0) return w;
            return -1;
        case Expr::Kind::Ternary: {
            int w = self_width(sc, e.args[1]);
            return w >= 0 ? w : self_width(sc, e.args[2]);
        }
        case Expr::Kind::Concat: {
            int sum = 0;
            for (const auto& a : e.args) {
                int w = self_width(sc, a);
                if (w < 0) fail("WidthMismatch", *sc.module, e.line, "unsized literal inside concatenation");
                sum += w;
            }
            return sum;
        }
        }
        return -1;
    }

    static unsigned min_width(std::uint64_t v) {
        unsigned w = 1;
        while (w < 64 && (v >> w) != 0) ++w;
        return w;
    }

    // Elaborate `e` at `width`, returning the slot holding its value. When
    // `into` is given the top-level operator drives that slot directly.
    Slot elab(Scope& sc, const Expr& e, unsigned width, const std::string& target, std::optional<Slot> into) {
        const ParsedModule& m = *sc.module;
        int sw = self_width(sc, e);
        if (sw >= 0 && static_cast<unsigned>(sw) != width)
            fail("WidthMismatch", m, e.line,
                 "expression '" + rtl::to_verilog(e) + "' is " + std::to_string(sw) + " bits, expected " +
                     std::to_string(width));
        auto out_slot = [&](const char* kind) {
            return into ? *into : new_slot(temp_name(sc, target, kind), width, true);
        };
        auto gate = [&](GateOp op, std::vector<Slot> ins, Slot out, unsigned msb = 0, unsigned lsb = 0) {
            PendingCell c;
            c.kind = CellKind::Gate;
            c.op = op;
            c.inputs = std::move(ins);
            c.output = out;
            c.slice_msb = msb;
            c.slice_lsb = lsb;
            std::string kind = to_string(op);
            std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char ch) { return std::tolower(ch); });
            c.name = temp_name(sc, target, kind.c_str());
            add_cell(std::move(c));
        };
        switch (e.kind) {
        case Expr::Kind::Ident: {
            Slot src = sc.symbols.at(e.name);
            if (!into) return src;
            gate(GateOp::Buf, {src}, *into);
            return *into;
        }
        case Expr::Kind::Index:
        case Expr::Kind::Slice: {
            Slot src = sc.symbols.at(e.name);
            unsigned msb = e.msb, lsb = e.kind == Expr::Kind::Index ? e.msb : e.lsb;
            if (msb >= widths_[src]) fail("WidthMismatch", m, e.line, "bit select out of range on " + e.name);
            Slot out = out_slot("n");
            gate(GateOp::Slice, {src}, out, msb, lsb);
            return out;
        }
        case Expr::Kind::Number: {
            if (e.width < 0 && min_width(e.value) > width)
                fail("WidthMismatch", m, e.line, "literal " + std::to_string(e.value) + " does not fit");
            Slot out = out_slot("c");
            PendingCell c;
            c.kind = CellKind::Const;
            c.value = e.value & width_mask(width);
            c.output = out;
            c.name = temp_name(sc, target, "const");
            add_cell(std::move(c));
            return out;
        }
        case Expr::Kind::Not:
        case Expr::Kind::LogicNot: {
            if (e.kind == Expr::Kind::LogicNot && width != 1)
                fail("WidthMismatch", m, e.line, "logical negation of a vector");
            Slot in = elab(sc, e.args[0], width, target, std::nullopt);
            Slot out = out_slot("n");
            gate(GateOp::Not, {in}, out);
            return out;
        }
        case Expr::Kind::And:
        case Expr::Kind::Or:
        case Expr::Kind::Xor: {
            std::vector<Slot> ins;
            for (const auto& a : e.args) ins.push_back(elab(sc, a, width, target, std::nullopt));
            Slot out = out_slot("n");
            GateOp op = e.kind == Expr::Kind::And ? GateOp::And : e.kind == Expr::Kind::Or ? GateOp::Or : GateOp::Xor;
            gate(op, std::move(ins), out);
            return out;
        }
        case Expr::Kind::Ternary: {
            Slot sel = elab(sc, e.args[0], 1, target, std::nullopt);
            Slot t = elab(sc, e.args[1], width, target, std::nullopt);
            Slot f = elab(sc, e.args[2], width, target, std::nullopt);
            Slot out = out_slot("n");
            gate(GateOp::Mux, {sel, t, f}, out);
            return out;
        }
        case Expr::Kind::Concat: {
            std::vector<Slot> ins;
            for (const auto& a : e.args)
                ins.push_back(elab(sc, a, static_cast<unsigned>(self_width(sc, a)), target, std::nullopt));
            Slot out = out_slot("n");
            gate(GateOp::Concat, std::move(ins), out);
            return out;
        }
        }
        return 0;
    }

    void add_cell(PendingCell c) {
        for (auto* v : open_instances_) v->push_back(static_cast<std::uint32_t>(cells_.size()));
        cells_.push_back(std::move(c));
    }

    std::map<std::string, Slot> expand(const ParsedModule& m, const std::string& prefix,
                                       std::vector<std::string>& stack, bool is_top) {
        stack.push_back(m.name);
        Scope sc;
        sc.module = &m;
        sc.prefix = prefix;
        for (const auto& p : m.ports) {
            Slot s = new_slot(prefix + p.name, p.width, false);
            sc.symbols[p.name] = s;
            if (is_top) top_ports_.push_back({p.name, p.dir, s});
        }
        for (const auto& d : m.decls) sc.symbols[d.name] = new_slot(prefix + d.name, d.width, false);

        for (const auto& a : m.assigns) {
            Slot t = sc.symbols.at(a.target);
            elab(sc, a.value, widths_[t], a.target, t);
        }

        for (const auto& b : m.blocks) {
            std::map<std::string, std::uint64_t> reset_values;
            for (const auto& a : b.reset_assigns) {
                if (a.value.kind != Expr::Kind::Number)
                    fail("NonConstantReset", m, a.line, "reset value of " + a.target + " must be a literal");
                Slot t = sc.symbols.at(a.target);
                if (a.value.width >= 0 && static_cast<unsigned>(a.value.width) != widths_[t])
                    fail("WidthMismatch", m, a.line, "reset value width differs from " + a.target);
                if (a.value.width < 0 && min_width(a.value.value) > widths_[t])
                    fail("WidthMismatch", m, a.line, "reset value does not fit " + a.target);
                if (!reset_values.emplace(a.target, a.value.value).second)
                    fail("MultipleAssignments", m, a.line, a.target + " reset twice");
            }
            std::map<std::string, const rtl::Assign*> next;
            std::vector<std::string> order;
            for (const auto& a : b.assigns) {
                if (!next.emplace(a.target, &a).second)
                    fail("MultipleAssignments", m, a.line, a.target + " assigned twice in one block");
                order.push_back(a.target);
            }
            for (const auto& [t, _] : reset_values)
                if (!next.count(t)) order.push_back(t);
            std::optional<Slot> enable;
            if (b.enable) {
                if (b.enable->kind == Expr::Kind::Ident)
                    enable = sc.symbols.at(b.enable->name);
                else
                    enable = elab(sc, *b.enable, 1, "en" + std::to_string(b.line), std::nullopt);
            }
            for (const auto& target : order) {
                Slot q = sc.symbols.at(target);
                PendingCell c;
                c.kind = CellKind::Dff;
                c.name = prefix + target;
                c.output = q;
                c.clock = sc.symbols.at(b.clock);
                if (b.reset) {
                    c.reset = sc.symbols.at(b.reset->name);
                    c.reset_active_low = b.reset->active_low;
                    c.reset_value = reset_values.count(target) ? reset_values[target] : 0;
                }
                c.enable = enable;
                if (auto it = next.find(target); it != next.end()) {
                    const Expr& v = it->second->value;
                    if (v.kind == Expr::Kind::Ident && widths_[sc.symbols.at(v.name)] == widths_[q])
                        c.data = sc.symbols.at(v.name);
                    else
                        c.data = elab(sc, v, widths_[q], target, std::nullopt);
                } else {
                    c.data = q; // only reset: holds its value otherwise
                }
                add_cell(std::move(c));
            }
        }

        for (const auto& inst : m.instances) {
            std::string path = prefix + inst.name;
            auto it = modules_.find(inst.module);
            if (it == modules_.end()) {
                if (!opts_.allow_black_boxes)
                    fail("UnresolvedModule", m, inst.line, "module '" + inst.module + "' is not defined");
                PendingBox box{path, inst.module, {}};
                for (const auto& c : inst.connections) {
                    if (!c.expr) continue;
                    int w = self_width(sc, *c.expr);
                    if (c.expr->kind == Expr::Kind::Ident) {
                        box.connected.push_back(sc.symbols.at(c.expr->name));
                    } else {
                        if (w < 0) fail("WidthMismatch", m, inst.line, "unsized literal on port " + c.port);
                        box.connected.push_back(elab(sc, *c.expr, static_cast<unsigned>(w), inst.name + "_" + c.port,
                                                     std::nullopt));
                    }
                }
                boxes_.push_back(std::move(box));
                continue;
            }
            if (std::find(stack.begin(), stack.end(), inst.module) != stack.end())
                fail("RecursiveInstantiation", m, inst.line, "module '" + inst.module + "' instantiates itself");
            const ParsedModule& sub = *it->second;
            std::vector<std::uint32_t> inst_cells;
            open_instances_.push_back(&inst_cells);
            auto child = expand(sub, path + ".", stack, false);
            open_instances_.pop_back();
            std::set<std::string> seen;
            for (const auto& c : inst.connections) {
                auto pit = std::find_if(sub.ports.begin(), sub.ports.end(),
                                        [&](const rtl::PortDecl& p) { return p.name == c.port; });
                if (pit == sub.ports.end())
                    fail("UnknownPort", m, inst.line, "module '" + sub.name + "' has no port '" + c.port + "'");
                if (!seen.insert(c.port).second)
                    fail("SyntaxError", m, inst.line, "port '" + c.port + "' connected twice");
                if (!c.expr) continue;
                Slot cp = child.at(c.port);
                int w = self_width(sc, *c.expr);
                if (w >= 0 && static_cast<unsigned>(w) != pit->width)
                    fail("PortWidthMismatch", m, inst.line,
                         inst.name + "." + c.port + " is " + std::to_string(pit->width) + " bits, connected to " +
                             std::to_string(w));
                if (c.expr->kind == Expr::Kind::Ident) {
                    unite(sc.symbols.at(c.expr->name), cp);
                } else if (pit->dir == PortDir::In) {
                    elab(sc, *c.expr, pit->width, inst.name + "_" + c.port, cp);
                } else {
                    fail("UnsupportedConstruct", m, inst.line, "output port '" + c.port + "' bound to an expression");
                }
            }
            instances_.push_back({path, sub.name, std::move(inst_cells)});
        }
        stack.pop_back();
        return sc.symbols;
    }

    Netlist finish(const std::string& top) {
        // Group slots into nets; canonical name is the shallowest member.
        std::map<Slot, std::vector<Slot>> classes;
        for (Slot s = 0; s < parent_.size(); ++s) classes[find(s)].push_back(s);
        auto depth = [&](Slot s) { return std::count(names_[s].begin(), names_[s].end(), '.'); };
        NetlistBuilder nb(top);
        std::vector<NetId> slot_net(parent_.size());
        std::map<Slot, NetId> class_net;
        std::map<Slot, Slot> top_input_class;
        for (const auto& p : top_ports_)
            if (p.dir == PortDir::In) top_input_class[find(p.slot)] = p.slot;

        for (auto& [root, members] : classes) {
            for (Slot s : members)
                if (widths_[s] != widths_[root])
                    throw Error("PortWidthMismatch", names_[s] + " (" + std::to_string(widths_[s]) + " bits) merged with " +
                                                         names_[root] + " (" + std::to_string(widths_[root]) + " bits)");
            Slot canon = *std::min_element(members.begin(), members.end(), [&](Slot a, Slot b) {
                if (temp_[a] != temp_[b]) return !temp_[a];
                if (depth(a) != depth(b)) return depth(a) < depth(b);
                return a < b;
            });
            NetId n;
            if (auto it = top_input_class.find(root); it != top_input_class.end()) {
                canon = it->second;
                n = nb.add_input(names_[canon], widths_[canon]);
            } else {
                n = nb.add_net(names_[canon], widths_[canon]);
            }
            for (Slot s : members) {
                slot_net[s] = n;
                if (s != canon && !temp_[s]) nb.add_alias(n, names_[s]);
            }
            class_net[root] = n;
        }
        for (const auto& p : top_ports_)
            if (p.dir == PortDir::Out) nb.add_output(p.name, slot_net[p.slot]);

        std::vector<CellId> cell_map(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const PendingCell& c = cells_[i];
            NetId out = slot_net[c.output];
            switch (c.kind) {
            case CellKind::Dff: {
                DffPins pins;
                pins.clock = slot_net[c.clock];
                pins.data = slot_net[c.data];
                if (c.enable) pins.enable = slot_net[*c.enable];
                if (c.reset) pins.reset = slot_net[*c.reset];
                pins.reset_active_low = c.reset_active_low;
                pins.reset_value = c.reset_value & width_mask(widths_[c.output]);
                cell_map[i] = nb.add_dff(c.name, pins, out);
                break;
            }
            case CellKind::Gate: {
                std::vector<NetId> ins;
                for (Slot s : c.inputs) ins.push_back(slot_net[s]);
                cell_map[i] = nb.add_gate(c.name, c.op, std::move(ins), out, c.slice_msb, c.slice_lsb);
                break;
            }
            case CellKind::Const: cell_map[i] = nb.add_const(c.name, c.value, out); break;
            }
        }
        for (auto& rec : instances_) {
            InstanceRecord r;
            r.path = rec.path;
            r.module = rec.module;
            for (auto idx : rec.cells) r.cells.push_back(cell_map[idx]);
            std::sort(r.cells.begin(), r.cells.end());
            nb.add_instance(std::move(r));
        }
        // Black boxes: connected nets without another driver are box outputs.
        Netlist probe = nb.build_unchecked();
        for (const auto& box : boxes_) {
            InstanceRecord r;
            r.path = box.path;
            r.module = box.module;
            r.black_box = true;
            std::set<NetId> outs, ins;
            for (Slot s : box.connected) {
                NetId n = slot_net[s];
                if (probe.nets[n].driver.kind == DriverKind::None && !outs.count(n))
                    outs.insert(n);
                else if (!outs.count(n))
                    ins.insert(n);
            }
            r.outputs.assign(outs.begin(), outs.end());
            r.inputs.assign(ins.begin(), ins.end());
            auto idx = nb.add_instance(r);
            for (NetId n : outs) nb.mark_black_box_output(n, idx);
        }
        return nb.build();
    }

    struct TopPort {
        std::string name;
        PortDir dir;
        Slot slot;
    };
    struct InstRec {
        std::string path;
        std::string module;
        std::vector<std::uint32_t> cells;
    };

    ElaborateOptions opts_;
    std::map<std::string, const ParsedModule*> modules_;
    std::vector<std::string> names_;
    std::vector<unsigned> widths_;
    std::vector<bool> temp_;
    std::vector<Slot> parent_;
    std::vector<PendingCell> cells_;
    std::vector<TopPort> top_ports_;
    std::vector<InstRec> instances_;
    std::vector<PendingBox> boxes_;
    std::vector<std::vector<std::uint32_t>*> open_instances_;
};

} // namespace

Netlist elaborate(const std::vector<rtl::ParsedModule>& modules, const std::string& top,
                  const ElaborateOptions& options) {
    return Elaborator(modules, options).run(top);
}

std::string infer_top(const std::vector<rtl::ParsedModule>& modules) {
    std::set<std::string> instantiated;
    for (const auto& m : modules)
        for (const auto& i : m.instances) instantiated.insert(i.module);
    std::vector<std::string> roots;
    for (const auto& m : modules)
        if (!instantiated.count(m.name)) roots.push_back(m.name);
    if (roots.size() != 1)
        throw Error("AmbiguousTop", roots.empty() ? "no top-level module" : "several candidate top modules; pass --top");
    return roots.front();
}

} // namespace cdcv
