#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdcv/constraints.hpp"
#include "cdcv/netlist.hpp"

namespace cdcv {

enum class NetDomainKind { Single, Mixed, Constant, Unclocked };

struct NetDomain {
    NetDomainKind kind = NetDomainKind::Unclocked;
    std::vector<std::string> domains; // sorted; one entry for Single
};

/// A Dff whose clock pin is reached through logic other than buffers.
struct ClockGate {
    CellId flop = 0;
    NetId clock_net = 0;
    std::string root_clock;
    std::vector<CellId> gates; // multi-input gates in the clock cone
};

struct DomainNote {
    std::string kind; // DataOnClockPin
    std::string subject;
    std::string message;
};

struct DomainMap {
    std::map<CellId, std::string> flop_domain;
    std::map<CellId, std::string> flop_clock; // root clock name
    std::vector<NetDomain> net_domain;        // indexed by NetId
    std::map<std::string, std::set<NetId>> clock_nets;
    std::map<PortId, std::string> port_domain; // declared clock/reset ports
    std::vector<ClockGate> gated;
    std::vector<DomainNote> notes;

    const std::string& domain_of(CellId dff) const { return flop_domain.at(dff); }
};

/// Label every Dff with the domain of the declared clock its clock cone
/// reaches, and every net with the domains feeding it.
/// Errors: UndeclaredClock, MixedClockDomains, DataOnClockPin (only when
/// `option data_on_clock error`).
DomainMap assign_domains(const Netlist& nl, const ConstraintSet& cs);

/// Source of a crossing: a Dff or an input port with a declared domain.
struct Endpoint {
    enum class Kind { Flop, Port } kind = Kind::Flop;
    std::uint32_t index = 0;
    auto operator<=>(const Endpoint&) const = default;
};

struct CdcPair {
    std::string id;
    Endpoint src;
    CellId dst = 0;
    PinKind pin = PinKind::Data; // Data or Enable
    std::string src_name;        // flop cell name or port name
    std::string dst_name;
    NetId src_net = 0;           // output net of the source
    NetId pin_net = 0;           // net on the destination pin
    std::string src_domain;
    std::string dst_domain;
    std::vector<CellId> path;    // comb cells from source towards destination
    unsigned width = 1;
    std::optional<std::string> suppressed; // "false_path" | "static"
};

struct RdcPair {
    std::string id;
    Endpoint src;
    CellId dst = 0;
    std::string src_name;
    std::string dst_name;
    std::string src_domain;
    std::string dst_domain;
    std::vector<CellId> path;
};

/// Input ports without a declared domain (or black-box outputs) feeding a
/// clocked flop. Informational only.
struct UnclockedCrossing {
    std::string source;
    std::string dst_name;
    PinKind pin = PinKind::Data;
};

std::string endpoint_name(const Netlist& nl, const Endpoint& e);
NetId endpoint_net(const Netlist& nl, const Endpoint& e);

/// All cross-domain (source, destination Dff, pin) triples connected by a
/// flop-free path into a data or enable pin, sorted by id.
std::vector<CdcPair> extract_cdc_pairs(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs);

std::vector<RdcPair> extract_rdc_pairs(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs);

std::vector<UnclockedCrossing> extract_unclocked(const Netlist& nl, const DomainMap& dm);

/// True when `name` is the canonical name or an alias of the net, or the
/// name of its driving cell.
bool names_net(const Netlist& nl, NetId net, const std::string& name);

nlohmann::json pairs_to_json(const Netlist& nl, const std::vector<CdcPair>& pairs, const std::vector<RdcPair>& rdc,
                             const std::vector<UnclockedCrossing>& unclocked);

} // namespace cdcv
