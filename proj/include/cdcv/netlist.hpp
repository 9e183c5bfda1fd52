#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdcv {

using NetId = std::uint32_t;
using CellId = std::uint32_t;
using PortId = std::uint32_t;

inline constexpr unsigned kMaxWidth = 64;

enum class CellKind { Dff, Gate, Const };
enum class GateOp { And, Or, Xor, Not, Buf, Mux, Concat, Slice };
enum class PortDir { In, Out };

/// Which input of a cell a net feeds.
enum class PinKind { Data, Clock, Enable, Reset, GateIn };

const char* to_string(CellKind k);
const char* to_string(GateOp op);
const char* to_string(PinKind k);

std::uint64_t width_mask(unsigned width);

struct DffPins {
    NetId clock = 0;
    NetId data = 0;
    std::optional<NetId> enable;
    std::optional<NetId> reset;
    bool reset_active_low = true;
    std::uint64_t reset_value = 0;
};

struct Cell {
    std::string name;
    CellKind kind = CellKind::Gate;
    NetId output = 0;

    // Dff
    DffPins dff;

    // Gate. Mux inputs are (select, when-true, when-false); Concat inputs are
    // listed most significant first.
    GateOp op = GateOp::Buf;
    std::vector<NetId> inputs;
    unsigned slice_msb = 0;
    unsigned slice_lsb = 0;

    // Const
    std::uint64_t value = 0;

    bool is_dff() const { return kind == CellKind::Dff; }
    bool is_gate() const { return kind == CellKind::Gate; }
    bool is_const() const { return kind == CellKind::Const; }
};

enum class DriverKind { None, Cell, InputPort, BlackBox };

struct Driver {
    DriverKind kind = DriverKind::None;
    std::uint32_t index = 0; // CellId, PortId or black-box instance index

    bool operator==(const Driver&) const = default;
};

struct Reader {
    enum class Kind { Cell, OutputPort } kind = Kind::Cell;
    std::uint32_t index = 0;
    PinKind pin = PinKind::GateIn;

    bool operator==(const Reader&) const = default;
};

struct Net {
    std::string name; // canonical (topmost) hierarchical name
    unsigned width = 1;
    Driver driver;
    std::vector<Driver> extra_drivers; // only populated on malformed netlists
    std::vector<Reader> readers;
    std::vector<std::string> aliases;
};

struct Port {
    std::string name;
    PortDir dir = PortDir::In;
    unsigned width = 1;
    NetId net = 0;
};

/// Pre-flattening record of one module instance.
struct InstanceRecord {
    std::string path;
    std::string module;
    bool black_box = false;
    std::vector<CellId> cells;
    std::vector<NetId> outputs; // black boxes: nets driven by the box
    std::vector<NetId> inputs;  // black boxes: nets read by the box
};

class Netlist {
public:
    std::string name;
    std::vector<Cell> cells;
    std::vector<Net> nets;
    std::vector<Port> ports;
    std::vector<InstanceRecord> instances;

    std::optional<NetId> find_net(const std::string& name) const;
    std::optional<CellId> find_cell(const std::string& name) const;
    std::optional<PortId> find_port(const std::string& name) const;

    NetId net(const std::string& name) const;   // throws UnknownNet
    CellId cell(const std::string& name) const; // throws UnknownCell

    /// Dff whose output drives `net`, if any.
    std::optional<CellId> dff_driving(NetId net) const;

    std::vector<CellId> dffs() const;

    /// Rebuild name indexes and reader lists from cells and ports.
    void reindex();

    nlohmann::json to_json() const;

private:
    std::unordered_map<std::string, NetId> net_index_;
    std::unordered_map<std::string, CellId> cell_index_;
    std::unordered_map<std::string, PortId> port_index_;
};

/// Incremental construction of a Netlist. `build()` validates and throws on
/// the first structural error; `build_unchecked()` skips validation.
class NetlistBuilder {
public:
    explicit NetlistBuilder(std::string name);

    NetId add_net(const std::string& name, unsigned width);
    NetId add_input(const std::string& name, unsigned width);
    void add_output(const std::string& name, NetId net);

    CellId add_dff(const std::string& name, const DffPins& pins, NetId q);
    CellId add_gate(const std::string& name, GateOp op, std::vector<NetId> inputs, NetId out,
                    unsigned slice_msb = 0, unsigned slice_lsb = 0);
    CellId add_const(const std::string& name, std::uint64_t value, NetId out);

    void add_alias(NetId net, const std::string& alias);
    void mark_black_box_output(NetId net, std::uint32_t instance);
    std::uint32_t add_instance(InstanceRecord record);
    InstanceRecord& instance(std::uint32_t index) { return nl_.instances.at(index); }

    unsigned width(NetId net) const { return nl_.nets.at(net).width; }
    std::size_t cell_count() const { return nl_.cells.size(); }

    Netlist build();
    Netlist build_unchecked();

private:
    void set_driver(NetId net, Driver d);

    Netlist nl_;
};

// ---------------------------------------------------------------------------
// Validation

struct StructuralError {
    std::string kind;    // MultipleDrivers, NoDriver, ArityMismatch, ...
    std::string subject; // offending net or cell name
    std::string message;

    bool operator==(const StructuralError&) const = default;
};

std::vector<StructuralError> validate(const Netlist& nl);

/// Gates and constants in dependency order. Throws CombinationalLoop.
std::vector<CellId> comb_order(const Netlist& nl);

// ---------------------------------------------------------------------------
// Fan-in cones

struct Cone {
    std::set<CellId> sequential;   // Dffs reached
    std::set<PortId> ports;        // input ports reached
    std::set<std::uint32_t> boxes; // black-box instances reached
    std::set<CellId> comb;         // gates traversed
    std::set<CellId> consts;       // constant cells reached

    bool operator==(const Cone&) const = default;
};

/// Backward traversal from `start`. With `stop_at_sequential` the walk ends at
/// Dff outputs and input ports; otherwise it continues through Dff data,
/// enable and reset pins (never clock pins). Throws CombinationalLoop.
Cone fanin_cone(const Netlist& nl, NetId start, bool stop_at_sequential);

/// Memoized stop-at-sequential cones. Safe to share between threads.
class ConeCache {
public:
    explicit ConeCache(const Netlist& nl) : nl_(nl) {}

    std::shared_ptr<const Cone> cone(NetId start);
    std::size_t computed() const;

private:
    std::shared_ptr<const Cone> compute(NetId net, std::vector<char>& on_stack);

    const Netlist& nl_;
    mutable std::mutex mu_;
    std::unordered_map<NetId, std::shared_ptr<const Cone>> memo_;
};

} // namespace cdcv
