#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdcv/domains.hpp"

namespace cdcv {

enum class SyncKind { Ndff, PulseToggle, MuxEnable, AsyncFifo, UserDefined };
const char* to_string(SyncKind k);

struct FifoSide {
    CellId ptr = 0;                  // gray pointer register
    std::vector<CellId> chain;       // its synchronizer in the other domain
    std::string domain;              // domain of `ptr`
};

struct SyncInstance {
    std::string id;
    SyncKind kind = SyncKind::Ndff;
    std::string dst_domain;
    std::vector<CellId> members;     // sorted
    std::vector<CellId> chain;       // Ndff stages, first to last
    std::vector<CellId> entries;     // flops that may receive protected crossings
    std::set<CellId> allowed;        // cells allowed on a protected crossing path
    std::vector<CellId> outputs;     // flops whose value leaves the structure
    std::vector<std::string> protected_pairs;
    std::vector<std::string> protected_rdc;
    bool reset_sync = false;

    // PulseToggle
    std::optional<CellId> toggle;    // source toggle flop
    std::optional<NetId> pulse_in;
    std::optional<NetId> pulse_out;

    // MuxEnable
    std::optional<NetId> select;
    std::vector<CellId> captures;    // destination data flops

    // AsyncFifo: write side first when it can be told apart
    std::vector<FifoSide> sides;
    bool write_side_known = false;

    // UserDefined
    std::string module;
    std::string instance;

    unsigned depth() const { return static_cast<unsigned>(chain.size()); }
};

enum class PairStatus { Synchronized, Unsynchronized, Suppressed };
const char* to_string(PairStatus s);

struct PairClass {
    PairStatus status = PairStatus::Unsynchronized;
    std::string sync_id; // Synchronized only
    SyncKind kind = SyncKind::Ndff;
};

struct SyncAnalysis {
    std::vector<SyncInstance> syncs; // sorted by id
    std::map<std::string, PairClass> classes; // by CDC pair id

    const SyncInstance* find(const std::string& id) const;
    /// Sync whose entries include `flop`, if any.
    const SyncInstance* entry_of(CellId flop) const;
};

/// Match synchronizer templates around the given crossings. Composite
/// structures (pulse, mux, fifo) absorb the flop chains they are built on.
SyncAnalysis recognize_synchronizers(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs,
                                     const std::vector<CdcPair>& pairs, const std::vector<RdcPair>& rdc);

nlohmann::json syncs_to_json(const Netlist& nl, const SyncAnalysis& sa);

} // namespace cdcv
