#include "cdcv/netlist.hpp"

#include <algorithm>
#include <functional>

#include "cdcv/error.hpp"

namespace cdcv {

const char* to_string(CellKind k) {
    switch (k) {
    case CellKind::Dff: return "Dff";
    case CellKind::Gate: return "Gate";
    case CellKind::Const: return "Const";
    }
    return "?";
}

const char* to_string(GateOp op) {
    switch (op) {
    case GateOp::And: return "AND";
    case GateOp::Or: return "OR";
    case GateOp::Xor: return "XOR";
    case GateOp::Not: return "NOT";
    case GateOp::Buf: return "BUF";
    case GateOp::Mux: return "MUX";
    case GateOp::Concat: return "CONCAT";
    case GateOp::Slice: return "SLICE";
    }
    return "?";
}

const char* to_string(PinKind k) {
    switch (k) {
    case PinKind::Data: return "data";
    case PinKind::Clock: return "clock";
    case PinKind::Enable: return "enable";
    case PinKind::Reset: return "reset";
    case PinKind::GateIn: return "in";
    }
    return "?";
}

std::uint64_t width_mask(unsigned width) {
    return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

// ---------------------------------------------------------------------------

std::optional<NetId> Netlist::find_net(const std::string& n) const {
    if (auto it = net_index_.find(n); it != net_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<CellId> Netlist::find_cell(const std::string& n) const {
    if (auto it = cell_index_.find(n); it != cell_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<PortId> Netlist::find_port(const std::string& n) const {
    if (auto it = port_index_.find(n); it != port_index_.end()) return it->second;
    return std::nullopt;
}

NetId Netlist::net(const std::string& n) const {
    if (auto id = find_net(n)) return *id;
    throw Error("UnknownNet", n);
}

CellId Netlist::cell(const std::string& n) const {
    if (auto id = find_cell(n)) return *id;
    throw Error("UnknownCell", n);
}

std::optional<CellId> Netlist::dff_driving(NetId n) const {
    const Driver& d = nets.at(n).driver;
    if (d.kind == DriverKind::Cell && cells[d.index].is_dff()) return d.index;
    return std::nullopt;
}

std::vector<CellId> Netlist::dffs() const {
    std::vector<CellId> out;
    for (CellId c = 0; c < cells.size(); ++c)
        if (cells[c].is_dff()) out.push_back(c);
    return out;
}

void Netlist::reindex() {
    net_index_.clear();
    cell_index_.clear();
    port_index_.clear();
    for (NetId n = 0; n < nets.size(); ++n) {
        nets[n].readers.clear();
        net_index_.emplace(nets[n].name, n);
        for (const auto& a : nets[n].aliases) net_index_.emplace(a, n);
    }
    for (CellId c = 0; c < cells.size(); ++c) {
        cell_index_.emplace(cells[c].name, c);
        const Cell& cell = cells[c];
        auto add = [&](NetId n, PinKind pin) {
            auto& rs = nets.at(n).readers;
            Reader r{Reader::Kind::Cell, c, pin};
            if (std::find(rs.begin(), rs.end(), r) == rs.end()) rs.push_back(r);
        };
        if (cell.is_dff()) {
            add(cell.dff.clock, PinKind::Clock);
            add(cell.dff.data, PinKind::Data);
            if (cell.dff.enable) add(*cell.dff.enable, PinKind::Enable);
            if (cell.dff.reset) add(*cell.dff.reset, PinKind::Reset);
        } else if (cell.is_gate()) {
            for (NetId in : cell.inputs) add(in, PinKind::GateIn);
        }
    }
    for (PortId p = 0; p < ports.size(); ++p) {
        port_index_.emplace(ports[p].name, p);
        if (ports[p].dir == PortDir::Out) {
            auto& rs = nets.at(ports[p].net).readers;
            Reader r{Reader::Kind::OutputPort, p, PinKind::GateIn};
            if (std::find(rs.begin(), rs.end(), r) == rs.end()) rs.push_back(r);
        }
    }
}

namespace {

std::string driver_name(const Netlist& nl, const Driver& d) {
    switch (d.kind) {
    case DriverKind::Cell: return nl.cells[d.index].name;
    case DriverKind::InputPort: return "port:" + nl.ports[d.index].name;
    case DriverKind::BlackBox: return "blackbox:" + nl.instances[d.index].path;
    case DriverKind::None: return "";
    }
    return "";
}

} // namespace

nlohmann::json Netlist::to_json() const {
    using nlohmann::json;
    json j;
    j["name"] = name;
    json jnets = json::array();
    for (const auto& n : nets) {
        json jn;
        jn["name"] = n.name;
        jn["width"] = n.width;
        jn["driver"] = driver_name(*this, n.driver);
        jn["aliases"] = n.aliases;
        json rs = json::array();
        for (const auto& r : n.readers) {
            if (r.kind == Reader::Kind::Cell)
                rs.push_back(cells[r.index].name + "." + to_string(r.pin));
            else
                rs.push_back("port:" + ports[r.index].name);
        }
        jn["readers"] = rs;
        jnets.push_back(jn);
    }
    json jcells = json::array();
    for (const auto& c : cells) {
        json jc;
        jc["name"] = c.name;
        jc["kind"] = to_string(c.kind);
        jc["output"] = nets[c.output].name;
        if (c.is_dff()) {
            jc["clock"] = nets[c.dff.clock].name;
            jc["data"] = nets[c.dff.data].name;
            if (c.dff.enable) jc["enable"] = nets[*c.dff.enable].name;
            if (c.dff.reset) {
                jc["reset"] = nets[*c.dff.reset].name;
                jc["reset_active_low"] = c.dff.reset_active_low;
            }
            jc["reset_value"] = c.dff.reset_value;
        } else if (c.is_gate()) {
            jc["op"] = to_string(c.op);
            json ins = json::array();
            for (NetId in : c.inputs) ins.push_back(nets[in].name);
            jc["inputs"] = ins;
            if (c.op == GateOp::Slice) jc["slice"] = {c.slice_msb, c.slice_lsb};
        } else {
            jc["value"] = c.value;
        }
        jcells.push_back(jc);
    }
    json jports = json::array();
    for (const auto& p : ports)
        jports.push_back({{"name", p.name},
                          {"dir", p.dir == PortDir::In ? "in" : "out"},
                          {"width", p.width},
                          {"net", nets[p.net].name}});
    json jinst = json::array();
    for (const auto& i : instances) {
        json ji{{"path", i.path}, {"module", i.module}, {"black_box", i.black_box}};
        json cs = json::array();
        for (CellId c : i.cells) cs.push_back(cells[c].name);
        ji["cells"] = cs;
        jinst.push_back(ji);
    }
    j["nets"] = jnets;
    j["cells"] = jcells;
    j["ports"] = jports;
    j["instances"] = jinst;
    return j;
}

// ---------------------------------------------------------------------------

NetlistBuilder::NetlistBuilder(std::string name) { nl_.name = std::move(name); }

NetId NetlistBuilder::add_net(const std::string& name, unsigned width) {
    if (width == 0 || width > kMaxWidth) throw Error("BadWidth", name + " width " + std::to_string(width));
    Net n;
    n.name = name;
    n.width = width;
    nl_.nets.push_back(std::move(n));
    return static_cast<NetId>(nl_.nets.size() - 1);
}

NetId NetlistBuilder::add_input(const std::string& name, unsigned width) {
    NetId n = add_net(name, width);
    nl_.ports.push_back(Port{name, PortDir::In, width, n});
    set_driver(n, Driver{DriverKind::InputPort, static_cast<std::uint32_t>(nl_.ports.size() - 1)});
    return n;
}

void NetlistBuilder::add_output(const std::string& name, NetId net) {
    nl_.ports.push_back(Port{name, PortDir::Out, nl_.nets.at(net).width, net});
}

void NetlistBuilder::set_driver(NetId net, Driver d) {
    Net& n = nl_.nets.at(net);
    if (n.driver.kind == DriverKind::None)
        n.driver = d;
    else
        n.extra_drivers.push_back(d);
}

CellId NetlistBuilder::add_dff(const std::string& name, const DffPins& pins, NetId q) {
    Cell c;
    c.name = name;
    c.kind = CellKind::Dff;
    c.dff = pins;
    c.output = q;
    nl_.cells.push_back(std::move(c));
    auto id = static_cast<CellId>(nl_.cells.size() - 1);
    set_driver(q, Driver{DriverKind::Cell, id});
    return id;
}

CellId NetlistBuilder::add_gate(const std::string& name, GateOp op, std::vector<NetId> inputs, NetId out,
                                unsigned slice_msb, unsigned slice_lsb) {
    Cell c;
    c.name = name;
    c.kind = CellKind::Gate;
    c.op = op;
    c.inputs = std::move(inputs);
    c.output = out;
    c.slice_msb = slice_msb;
    c.slice_lsb = slice_lsb;
    nl_.cells.push_back(std::move(c));
    auto id = static_cast<CellId>(nl_.cells.size() - 1);
    set_driver(out, Driver{DriverKind::Cell, id});
    return id;
}

CellId NetlistBuilder::add_const(const std::string& name, std::uint64_t value, NetId out) {
    Cell c;
    c.name = name;
    c.kind = CellKind::Const;
    c.value = value & width_mask(nl_.nets.at(out).width);
    c.output = out;
    nl_.cells.push_back(std::move(c));
    auto id = static_cast<CellId>(nl_.cells.size() - 1);
    set_driver(out, Driver{DriverKind::Cell, id});
    return id;
}

void NetlistBuilder::add_alias(NetId net, const std::string& alias) {
    auto& as = nl_.nets.at(net).aliases;
    if (alias != nl_.nets[net].name && std::find(as.begin(), as.end(), alias) == as.end()) as.push_back(alias);
}

void NetlistBuilder::mark_black_box_output(NetId net, std::uint32_t instance) {
    set_driver(net, Driver{DriverKind::BlackBox, instance});
}

std::uint32_t NetlistBuilder::add_instance(InstanceRecord record) {
    nl_.instances.push_back(std::move(record));
    return static_cast<std::uint32_t>(nl_.instances.size() - 1);
}

Netlist NetlistBuilder::build_unchecked() {
    Netlist out = nl_;
    out.reindex();
    return out;
}

Netlist NetlistBuilder::build() {
    Netlist out = build_unchecked();
    auto errors = validate(out);
    if (!errors.empty()) throw Error(errors.front().kind, errors.front().subject + ": " + errors.front().message);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

bool arity_ok(const Cell& c) {
    switch (c.op) {
    case GateOp::Not:
    case GateOp::Buf:
    case GateOp::Slice: return c.inputs.size() == 1;
    case GateOp::Mux: return c.inputs.size() == 3;
    default: return c.inputs.size() >= 2;
    }
}

std::optional<std::string> width_problem(const Netlist& nl, const Cell& c) {
    auto w = [&](NetId n) { return nl.nets[n].width; };
    unsigned out = w(c.output);
    switch (c.op) {
    case GateOp::Not:
    case GateOp::Buf:
        if (w(c.inputs[0]) != out) return "operand width differs from output";
        break;
    case GateOp::And:
    case GateOp::Or:
    case GateOp::Xor:
        for (NetId in : c.inputs)
            if (w(in) != out) return "operand width differs from output";
        break;
    case GateOp::Mux:
        if (w(c.inputs[0]) != 1) return "mux select must be 1 bit";
        if (w(c.inputs[1]) != out || w(c.inputs[2]) != out) return "mux arm width differs from output";
        break;
    case GateOp::Concat: {
        unsigned sum = 0;
        for (NetId in : c.inputs) sum += w(in);
        if (sum != out) return "concat width differs from output";
        break;
    }
    case GateOp::Slice:
        if (c.slice_msb < c.slice_lsb || c.slice_msb >= w(c.inputs[0]) || c.slice_msb - c.slice_lsb + 1 != out)
            return "slice range out of bounds";
        break;
    }
    return std::nullopt;
}

} // namespace

std::vector<StructuralError> validate(const Netlist& nl) {
    std::vector<StructuralError> errs;
    std::set<std::string> cell_names, net_names;
    for (const auto& c : nl.cells)
        if (!cell_names.insert(c.name).second) errs.push_back({"DuplicateName", c.name, "cell name not unique"});
    for (const auto& n : nl.nets) {
        if (!net_names.insert(n.name).second) errs.push_back({"DuplicateName", n.name, "net name not unique"});
        if (n.name.empty()) errs.push_back({"EmptyName", "<net>", "net without source name"});
        if (n.width == 0) errs.push_back({"BadWidth", n.name, "zero width"});
        if (!n.extra_drivers.empty()) errs.push_back({"MultipleDrivers", n.name, "net has more than one driver"});
        if (n.driver.kind == DriverKind::None && !n.readers.empty())
            errs.push_back({"NoDriver", n.name, "net is read but never driven"});
        for (std::size_t i = 0; i < n.readers.size(); ++i)
            for (std::size_t j = i + 1; j < n.readers.size(); ++j)
                if (n.readers[i] == n.readers[j]) errs.push_back({"DuplicateReader", n.name, "reader listed twice"});
    }
    // Bidirectional index agreement.
    for (CellId c = 0; c < nl.cells.size(); ++c) {
        const Cell& cell = nl.cells[c];
        const Net& out = nl.nets.at(cell.output);
        bool drives = (out.driver == Driver{DriverKind::Cell, c}) ||
                      std::find(out.extra_drivers.begin(), out.extra_drivers.end(), Driver{DriverKind::Cell, c}) !=
                          out.extra_drivers.end();
        if (!drives) errs.push_back({"IndexMismatch", cell.name, "output net does not list the cell as driver"});
        auto check_reader = [&](NetId n, PinKind pin) {
            const auto& rs = nl.nets.at(n).readers;
            if (std::find(rs.begin(), rs.end(), Reader{Reader::Kind::Cell, c, pin}) == rs.end())
                errs.push_back({"IndexMismatch", cell.name, "input net " + nl.nets[n].name + " lacks reader entry"});
        };
        if (cell.is_dff()) {
            check_reader(cell.dff.clock, PinKind::Clock);
            check_reader(cell.dff.data, PinKind::Data);
            if (cell.dff.enable) check_reader(*cell.dff.enable, PinKind::Enable);
            if (cell.dff.reset) check_reader(*cell.dff.reset, PinKind::Reset);
            if (nl.nets[cell.dff.clock].width != 1) errs.push_back({"BadClock", cell.name, "clock must be 1 bit"});
            if (nl.nets[cell.dff.data].width != out.width)
                errs.push_back({"WidthMismatch", cell.name, "data width differs from output"});
            if (cell.dff.enable && nl.nets[*cell.dff.enable].width != 1)
                errs.push_back({"WidthMismatch", cell.name, "enable must be 1 bit"});
            if (cell.dff.reset && nl.nets[*cell.dff.reset].width != 1)
                errs.push_back({"WidthMismatch", cell.name, "reset must be 1 bit"});
        } else if (cell.is_gate()) {
            if (!arity_ok(cell)) {
                errs.push_back({"ArityMismatch", cell.name, std::string(to_string(cell.op)) + " arity"});
                continue;
            }
            for (NetId in : cell.inputs) check_reader(in, PinKind::GateIn);
            if (auto p = width_problem(nl, cell)) errs.push_back({"WidthMismatch", cell.name, *p});
        }
    }
    try {
        (void)comb_order(nl);
    } catch (const Error& e) {
        errs.push_back({"CombinationalLoop", e.what(), "combinational cycle"});
    }
    return errs;
}

std::vector<CellId> comb_order(const Netlist& nl) {
    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<char> state(nl.cells.size(), 0);
    std::vector<CellId> order;
    order.reserve(nl.cells.size());
    // Iterative DFS to survive deep chains.
    for (CellId root = 0; root < nl.cells.size(); ++root) {
        if (nl.cells[root].is_dff() || state[root]) continue;
        std::vector<std::pair<CellId, std::size_t>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [c, i] = stack.back();
            const Cell& cell = nl.cells[c];
            if (cell.is_gate() && i < cell.inputs.size()) {
                NetId in = cell.inputs[i++];
                const Driver& d = nl.nets[in].driver;
                if (d.kind != DriverKind::Cell || nl.cells[d.index].is_dff()) continue;
                if (state[d.index] == 1) throw Error("CombinationalLoop", nl.cells[d.index].name);
                if (state[d.index] == 0) {
                    state[d.index] = 1;
                    stack.emplace_back(d.index, 0);
                }
                continue;
            }
            state[c] = 2;
            order.push_back(c);
            stack.pop_back();
        }
    }
    return order;
}

// ---------------------------------------------------------------------------

Cone fanin_cone(const Netlist& nl, NetId start, bool stop_at_sequential) {
    Cone cone;
    if (stop_at_sequential) {
        ConeCache cache(nl);
        return *cache.cone(start);
    }
    std::vector<char> seen(nl.nets.size(), 0);
    std::vector<NetId> work{start};
    seen[start] = 1;
    auto push = [&](NetId n) {
        if (!seen[n]) {
            seen[n] = 1;
            work.push_back(n);
        }
    };
    while (!work.empty()) {
        NetId n = work.back();
        work.pop_back();
        const Driver& d = nl.nets[n].driver;
        switch (d.kind) {
        case DriverKind::InputPort: cone.ports.insert(d.index); break;
        case DriverKind::BlackBox: cone.boxes.insert(d.index); break;
        case DriverKind::None: break;
        case DriverKind::Cell: {
            const Cell& c = nl.cells[d.index];
            if (c.is_const()) {
                cone.consts.insert(d.index);
            } else if (c.is_gate()) {
                cone.comb.insert(d.index);
                for (NetId in : c.inputs) push(in);
            } else {
                cone.sequential.insert(d.index);
                push(c.dff.data);
                if (c.dff.enable) push(*c.dff.enable);
                if (c.dff.reset) push(*c.dff.reset);
            }
            break;
        }
        }
    }
    return cone;
}

std::shared_ptr<const Cone> ConeCache::cone(NetId start) {
    std::lock_guard lock(mu_);
    std::vector<char> on_stack(nl_.cells.size(), 0);
    return compute(start, on_stack);
}

std::size_t ConeCache::computed() const {
    std::lock_guard lock(mu_);
    return memo_.size();
}

std::shared_ptr<const Cone> ConeCache::compute(NetId net, std::vector<char>& on_stack) {
    if (auto it = memo_.find(net); it != memo_.end()) return it->second;
    auto cone = std::make_shared<Cone>();
    const Driver& d = nl_.nets.at(net).driver;
    switch (d.kind) {
    case DriverKind::InputPort: cone->ports.insert(d.index); break;
    case DriverKind::BlackBox: cone->boxes.insert(d.index); break;
    case DriverKind::None: break;
    case DriverKind::Cell: {
        const Cell& c = nl_.cells[d.index];
        if (c.is_const()) {
            cone->consts.insert(d.index);
        } else if (c.is_dff()) {
            cone->sequential.insert(d.index);
        } else {
            if (on_stack[d.index]) throw Error("CombinationalLoop", c.name);
            on_stack[d.index] = 1;
            cone->comb.insert(d.index);
            for (NetId in : c.inputs) {
                auto sub = compute(in, on_stack);
                cone->sequential.insert(sub->sequential.begin(), sub->sequential.end());
                cone->ports.insert(sub->ports.begin(), sub->ports.end());
                cone->boxes.insert(sub->boxes.begin(), sub->boxes.end());
                cone->comb.insert(sub->comb.begin(), sub->comb.end());
                cone->consts.insert(sub->consts.begin(), sub->consts.end());
            }
            on_stack[d.index] = 0;
        }
        break;
    }
    }
    memo_.emplace(net, cone);
    return cone;
}

} // namespace cdcv
