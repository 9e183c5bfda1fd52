#include "cdcv/sync.hpp"

#include <algorithm>

namespace cdcv {

const char* to_string(SyncKind k) {
    switch (k) {
    case SyncKind::Ndff: return "Ndff";
    case SyncKind::PulseToggle: return "PulseToggle";
    case SyncKind::MuxEnable: return "MuxEnable";
    case SyncKind::AsyncFifo: return "AsyncFifo";
    case SyncKind::UserDefined: return "UserDefined";
    }
    return "?";
}

const char* to_string(PairStatus s) {
    switch (s) {
    case PairStatus::Synchronized: return "Synchronized";
    case PairStatus::Unsynchronized: return "Unsynchronized";
    case PairStatus::Suppressed: return "Suppressed";
    }
    return "?";
}

const SyncInstance* SyncAnalysis::find(const std::string& id) const {
    for (const auto& s : syncs)
        if (s.id == id) return &s;
    return nullptr;
}

const SyncInstance* SyncAnalysis::entry_of(CellId flop) const {
    for (const auto& s : syncs)
        if (std::find(s.entries.begin(), s.entries.end(), flop) != s.entries.end()) return &s;
    return nullptr;
}

namespace {

class Matcher {
public:
    Matcher(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs, const std::vector<CdcPair>& pairs,
            const std::vector<RdcPair>& rdc)
        : nl_(nl), dm_(dm), cs_(cs), pairs_(pairs), rdc_(rdc), claimed_(nl.cells.size(), 0) {}

    SyncAnalysis run();

private:
    std::optional<CellId> driver_cell(NetId n) const {
        const Driver& d = nl_.nets[n].driver;
        if (d.kind != DriverKind::Cell) return std::nullopt;
        return d.index;
    }
    const Cell* gate_driving(NetId n, GateOp op) const {
        auto c = driver_cell(n);
        if (!c || !nl_.cells[*c].is_gate() || nl_.cells[*c].op != op) return nullptr;
        return &nl_.cells[*c];
    }
    NetId strip_buf(NetId n) const {
        while (const Cell* b = gate_driving(n, GateOp::Buf)) n = b->inputs[0];
        return n;
    }

    std::vector<const CdcPair*> pairs_into(CellId dst, PinKind pin) const {
        std::vector<const CdcPair*> v;
        for (const auto& p : pairs_)
            if (p.dst == dst && p.pin == pin) v.push_back(&p);
        return v;
    }

    std::vector<CellId> chain_from(CellId head, bool reset_chain) const;
    bool is_gray_encoded(NetId d, NetId* binary) const;
    bool addresses_storage(const FifoSide& side, NetId binary) const;

    void user_defined();
    void ndff_chains();
    void reset_chains();
    std::optional<SyncInstance> as_pulse(const std::vector<CellId>& chain);
    std::optional<SyncInstance> as_mux(const std::vector<CellId>& chain);
    void fifos(std::vector<std::vector<CellId>>& chains);
    void classify(SyncAnalysis& sa);

    void claim(const SyncInstance& s) {
        for (CellId c : s.members) claimed_[c] = 1;
    }
    void finish(SyncInstance s) {
        std::sort(s.members.begin(), s.members.end());
        s.members.erase(std::unique(s.members.begin(), s.members.end()), s.members.end());
        claim(s);
        out_.push_back(std::move(s));
    }

    const Netlist& nl_;
    const DomainMap& dm_;
    const ConstraintSet& cs_;
    const std::vector<CdcPair>& pairs_;
    const std::vector<RdcPair>& rdc_;
    std::vector<char> claimed_;
    std::vector<SyncInstance> out_;
};

std::vector<CellId> Matcher::chain_from(CellId head, bool reset_chain) const {
    const Cell& h = nl_.cells[head];
    if (h.dff.enable) return {};
    std::vector<CellId> chain{head};
    CellId cur = head;
    for (;;) {
        const Net& q = nl_.nets[nl_.cells[cur].output];
        if (q.readers.size() != 1) break;
        const Reader& r = q.readers[0];
        if (r.kind != Reader::Kind::Cell || r.pin != PinKind::Data) break;
        const Cell& n = nl_.cells[r.index];
        if (!n.is_dff() || n.dff.enable || n.dff.clock != h.dff.clock || claimed_[r.index]) break;
        if (reset_chain && n.dff.reset != h.dff.reset) break;
        if (std::find(chain.begin(), chain.end(), r.index) != chain.end()) break;
        chain.push_back(r.index);
        cur = r.index;
    }
    return chain;
}

// d == b ^ {1'b0, b[w-1:1]} up to buffers; reports b.
bool Matcher::is_gray_encoded(NetId d, NetId* binary) const {
    const Cell* x = gate_driving(strip_buf(d), GateOp::Xor);
    if (!x || x->inputs.size() != 2) return false;
    for (int k = 0; k < 2; ++k) {
        NetId b = strip_buf(x->inputs[k]);
        const Cell* cat = gate_driving(strip_buf(x->inputs[1 - k]), GateOp::Concat);
        if (!cat || cat->inputs.size() != 2) continue;
        auto z = driver_cell(cat->inputs[0]);
        if (!z || !nl_.cells[*z].is_const() || nl_.cells[*z].value != 0) continue;
        const Cell* sl = gate_driving(strip_buf(cat->inputs[1]), GateOp::Slice);
        unsigned w = nl_.nets[b].width;
        if (!sl || strip_buf(sl->inputs[0]) != b || sl->slice_msb != w - 1 || sl->slice_lsb != 1) continue;
        *binary = b;
        return true;
    }
    return false;
}

// The write pointer's binary counter decodes the storage write enables.
bool Matcher::addresses_storage(const FifoSide& side, NetId binary) const {
    ConeCache cache(nl_);
    auto bin_src = cache.cone(binary)->sequential;
    bin_src.insert(side.ptr);
    for (CellId f : nl_.dffs()) {
        const Cell& c = nl_.cells[f];
        if (!c.dff.enable || f == side.ptr || dm_.domain_of(f) != side.domain) continue;
        for (CellId s : cache.cone(*c.dff.enable)->sequential)
            if (bin_src.count(s) && s != f) return true;
    }
    return false;
}

void Matcher::user_defined() {
    for (const auto& inst : nl_.instances) {
        if (inst.black_box || !cs_.is_sync_cell(inst.module)) continue;
        SyncInstance s;
        s.kind = SyncKind::UserDefined;
        s.id = "user:" + inst.path;
        s.module = inst.module;
        s.instance = inst.path;
        s.members = inst.cells;
        std::set<CellId> mem(inst.cells.begin(), inst.cells.end());
        s.allowed = mem;
        for (const auto& p : pairs_) {
            if (!mem.count(p.dst)) continue;
            if (p.src.kind == Endpoint::Kind::Flop && mem.count(p.src.index)) continue;
            if (std::find(s.entries.begin(), s.entries.end(), p.dst) == s.entries.end()) s.entries.push_back(p.dst);
        }
        for (CellId c : inst.cells) {
            if (!nl_.cells[c].is_dff()) continue;
            for (const Reader& r : nl_.nets[nl_.cells[c].output].readers)
                if (r.kind == Reader::Kind::OutputPort || !mem.count(r.index)) {
                    s.outputs.push_back(c);
                    break;
                }
        }
        std::sort(s.entries.begin(), s.entries.end());
        if (!s.entries.empty())
            s.dst_domain = dm_.domain_of(s.entries.front());
        else
            for (CellId c : inst.cells)
                if (nl_.cells[c].is_dff()) {
                    s.dst_domain = dm_.domain_of(c);
                    break;
                }
        finish(std::move(s));
    }
}

void Matcher::reset_chains() {
    std::set<CellId> heads;
    for (const auto& r : rdc_) heads.insert(r.dst);
    for (CellId h : heads) {
        if (claimed_[h]) continue;
        const Cell& c = nl_.cells[h];
        auto k = driver_cell(c.dff.data);
        if (!k || !nl_.cells[*k].is_const()) continue;
        if (nl_.cells[*k].value != width_mask(nl_.nets[c.dff.data].width)) continue;
        auto chain = chain_from(h, true);
        if (chain.size() < cs_.ndff_min_depth()) continue;
        SyncInstance s;
        s.kind = SyncKind::Ndff;
        s.reset_sync = true;
        s.id = "ndff:" + c.name;
        s.dst_domain = dm_.domain_of(h);
        s.chain = chain;
        s.members = chain;
        s.entries = {h};
        s.outputs = {chain.back()};
        finish(std::move(s));
    }
}

std::optional<SyncInstance> Matcher::as_pulse(const std::vector<CellId>& chain) {
    auto in = pairs_into(chain.front(), PinKind::Data);
    if (in.size() != 1 || in[0]->src.kind != Endpoint::Kind::Flop || in[0]->width != 1) return std::nullopt;
    CellId t = in[0]->src.index;
    const Cell& tc = nl_.cells[t];
    if (claimed_[t]) return std::nullopt;
    auto g1 = driver_cell(tc.dff.data);
    if (!g1 || !nl_.cells[*g1].is_gate() || nl_.cells[*g1].op != GateOp::Xor || nl_.cells[*g1].inputs.size() != 2)
        return std::nullopt;
    const auto& gi = nl_.cells[*g1].inputs;
    std::optional<NetId> pulse;
    if (gi[0] == tc.output) pulse = gi[1];
    else if (gi[1] == tc.output) pulse = gi[0];
    if (!pulse) return std::nullopt;

    CellId last = chain.back();
    NetId lq = nl_.cells[last].output;
    for (const Reader& r : nl_.nets[lq].readers) {
        if (r.kind != Reader::Kind::Cell || r.pin != PinKind::Data) continue;
        const Cell& x = nl_.cells[r.index];
        if (!x.is_dff() || x.dff.clock != nl_.cells[last].dff.clock || x.dff.enable) continue;
        for (const Reader& r2 : nl_.nets[lq].readers) {
            if (r2.kind != Reader::Kind::Cell) continue;
            const Cell& g = nl_.cells[r2.index];
            if (!g.is_gate() || g.op != GateOp::Xor || g.inputs.size() != 2) continue;
            std::set<NetId> want{lq, x.output};
            if (std::set<NetId>(g.inputs.begin(), g.inputs.end()) != want) continue;
            SyncInstance s;
            s.kind = SyncKind::PulseToggle;
            s.id = "pulse:" + nl_.cells[chain.front()].name;
            s.dst_domain = dm_.domain_of(chain.front());
            s.chain = chain;
            s.members = chain;
            s.members.insert(s.members.end(), {t, *g1, r.index, r2.index});
            s.entries = {chain.front()};
            s.outputs = {last, r.index};
            s.toggle = t;
            s.pulse_in = *pulse;
            s.pulse_out = g.output;
            return s;
        }
    }
    return std::nullopt;
}

std::optional<SyncInstance> Matcher::as_mux(const std::vector<CellId>& chain) {
    CellId last = chain.back();
    NetId sel = nl_.cells[last].output;
    if (nl_.nets[sel].width != 1) return std::nullopt;
    const std::string& dom = dm_.domain_of(last);
    // Nets equal to the select: its Q plus any buffer copies.
    std::vector<NetId> sel_nets{sel};
    for (std::size_t i = 0; i < sel_nets.size(); ++i)
        for (const Reader& r : nl_.nets[sel_nets[i]].readers)
            if (r.kind == Reader::Kind::Cell && nl_.cells[r.index].is_gate() && nl_.cells[r.index].op == GateOp::Buf)
                sel_nets.push_back(nl_.cells[r.index].output);

    SyncInstance s;
    for (NetId sn : sel_nets) {
        for (const Reader& r : nl_.nets[sn].readers) {
            if (r.kind != Reader::Kind::Cell) continue;
            const Cell& c = nl_.cells[r.index];
            if (c.is_dff() && r.pin == PinKind::Enable && dm_.domain_of(r.index) == dom && !claimed_[r.index]) {
                s.captures.push_back(r.index);
                continue;
            }
            if (!c.is_gate() || c.op != GateOp::Mux || c.inputs[0] != sn) continue;
            for (const Reader& r2 : nl_.nets[c.output].readers) {
                if (r2.kind != Reader::Kind::Cell || r2.pin != PinKind::Data) continue;
                const Cell& f = nl_.cells[r2.index];
                if (!f.is_dff() || claimed_[r2.index] || dm_.domain_of(r2.index) != dom) continue;
                if (c.inputs[1] != f.output && c.inputs[2] != f.output) continue;
                s.captures.push_back(r2.index);
                s.allowed.insert(r.index);
                s.members.push_back(r.index);
            }
        }
    }
    std::sort(s.captures.begin(), s.captures.end());
    s.captures.erase(std::unique(s.captures.begin(), s.captures.end()), s.captures.end());
    bool crossing = false;
    for (CellId f : s.captures)
        if (!pairs_into(f, PinKind::Data).empty()) crossing = true;
    if (!crossing) return std::nullopt;
    s.kind = SyncKind::MuxEnable;
    s.id = "mux:" + nl_.cells[chain.front()].name;
    s.dst_domain = dom;
    s.chain = chain;
    s.members.insert(s.members.end(), chain.begin(), chain.end());
    s.members.insert(s.members.end(), s.captures.begin(), s.captures.end());
    s.entries = {chain.front()};
    s.entries.insert(s.entries.end(), s.captures.begin(), s.captures.end());
    s.outputs = s.captures;
    s.select = sel;
    return s;
}

void Matcher::fifos(std::vector<std::vector<CellId>>& chains) {
    struct Cand {
        std::size_t chain;
        CellId ptr;
        NetId binary;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        CellId head = chains[i].front();
        if (nl_.nets[nl_.cells[head].output].width < 2) continue;
        auto in = pairs_into(head, PinKind::Data);
        if (in.size() != 1 || in[0]->src.kind != Endpoint::Kind::Flop || !in[0]->path.empty()) continue;
        NetId bin = 0;
        if (!is_gray_encoded(nl_.cells[in[0]->src.index].dff.data, &bin)) continue;
        cands.push_back({i, in[0]->src.index, bin});
    }
    std::vector<char> used(cands.size(), 0);
    std::vector<std::size_t> absorbed;
    for (std::size_t a = 0; a < cands.size(); ++a) {
        if (used[a]) continue;
        const std::string& a_src = dm_.domain_of(cands[a].ptr);
        const std::string& a_dst = dm_.domain_of(chains[cands[a].chain].front());
        for (std::size_t b = a + 1; b < cands.size(); ++b) {
            if (used[b]) continue;
            if (dm_.domain_of(cands[b].ptr) != a_dst || dm_.domain_of(chains[cands[b].chain].front()) != a_src)
                continue;
            if (nl_.nets[nl_.cells[cands[a].ptr].output].width != nl_.nets[nl_.cells[cands[b].ptr].output].width)
                continue;
            used[a] = used[b] = 1;
            FifoSide sa{cands[a].ptr, chains[cands[a].chain], a_src};
            FifoSide sb{cands[b].ptr, chains[cands[b].chain], a_dst};
            bool wa = addresses_storage(sa, cands[a].binary);
            bool wb = addresses_storage(sb, cands[b].binary);
            SyncInstance s;
            s.kind = SyncKind::AsyncFifo;
            s.write_side_known = wa != wb;
            if (wb && !wa) std::swap(sa, sb);
            s.sides = {sa, sb};
            s.id = "fifo:" + nl_.cells[s.sides[0].ptr].name;
            s.dst_domain = s.sides[1].domain;
            for (const auto& sd : s.sides) {
                s.members.push_back(sd.ptr);
                s.members.insert(s.members.end(), sd.chain.begin(), sd.chain.end());
                s.entries.push_back(sd.chain.front());
                s.outputs.push_back(sd.chain.back());
            }
            s.chain = s.sides[0].chain;
            finish(std::move(s));
            absorbed.push_back(cands[a].chain);
            absorbed.push_back(cands[b].chain);
            break;
        }
    }
    std::sort(absorbed.rbegin(), absorbed.rend());
    for (std::size_t i : absorbed) chains.erase(chains.begin() + static_cast<long>(i));
}

void Matcher::ndff_chains() {
    std::set<std::pair<std::string, CellId>> heads;
    for (const auto& p : pairs_)
        if (p.pin == PinKind::Data) heads.insert({p.dst_name, p.dst});
    std::vector<std::vector<CellId>> chains;
    std::vector<char> in_chain(nl_.cells.size(), 0);
    for (const auto& [name, h] : heads) {
        if (claimed_[h] || in_chain[h]) continue;
        auto chain = chain_from(h, false);
        if (chain.size() < cs_.ndff_min_depth()) continue;
        for (CellId c : chain) in_chain[c] = 1;
        chains.push_back(std::move(chain));
    }
    fifos(chains);
    for (auto& chain : chains) {
        if (auto s = as_pulse(chain)) {
            finish(std::move(*s));
            continue;
        }
        if (auto s = as_mux(chain)) {
            finish(std::move(*s));
            continue;
        }
        SyncInstance s;
        s.kind = SyncKind::Ndff;
        s.id = "ndff:" + nl_.cells[chain.front()].name;
        s.dst_domain = dm_.domain_of(chain.front());
        s.chain = chain;
        s.members = chain;
        s.entries = {chain.front()};
        s.outputs = {chain.back()};
        finish(std::move(s));
    }
}

void Matcher::classify(SyncAnalysis& sa) {
    for (const auto& p : pairs_) {
        PairClass pc;
        if (p.suppressed) {
            pc.status = PairStatus::Suppressed;
        } else if (const SyncInstance* s = sa.entry_of(p.dst)) {
            bool ok = std::all_of(p.path.begin(), p.path.end(), [&](CellId c) {
                return nl_.cells[c].inputs.size() == 1 || s->allowed.count(c) > 0;
            });
            if (ok) {
                pc.status = PairStatus::Synchronized;
                pc.sync_id = s->id;
                pc.kind = s->kind;
                for (auto& m : sa.syncs)
                    if (m.id == s->id) m.protected_pairs.push_back(p.id);
            }
        }
        sa.classes[p.id] = pc;
    }
    for (auto& s : sa.syncs) {
        if (!s.reset_sync) continue;
        for (const auto& r : rdc_)
            if (std::find(s.chain.begin(), s.chain.end(), r.dst) != s.chain.end()) s.protected_rdc.push_back(r.id);
    }
}

SyncAnalysis Matcher::run() {
    user_defined();
    reset_chains();
    ndff_chains();
    SyncAnalysis sa;
    sa.syncs = std::move(out_);
    std::sort(sa.syncs.begin(), sa.syncs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    classify(sa);
    return sa;
}

} // namespace

SyncAnalysis recognize_synchronizers(const Netlist& nl, const DomainMap& dm, const ConstraintSet& cs,
                                     const std::vector<CdcPair>& pairs, const std::vector<RdcPair>& rdc) {
    return Matcher(nl, dm, cs, pairs, rdc).run();
}

nlohmann::json syncs_to_json(const Netlist& nl, const SyncAnalysis& sa) {
    using nlohmann::json;
    auto names = [&](const std::vector<CellId>& v) {
        json a = json::array();
        for (CellId c : v) a.push_back(nl.cells[c].name);
        return a;
    };
    json arr = json::array();
    for (const auto& s : sa.syncs) {
        json j = {{"id", s.id},
                  {"kind", to_string(s.kind)},
                  {"dst_domain", s.dst_domain},
                  {"members", names(s.members)},
                  {"entries", names(s.entries)},
                  {"protected", s.protected_pairs}};
        if (!s.chain.empty()) j["depth"] = s.depth();
        if (s.reset_sync) {
            j["reset_sync"] = true;
            j["protected_rdc"] = s.protected_rdc;
        }
        if (s.kind == SyncKind::AsyncFifo) {
            j["write_ptr"] = nl.cells[s.sides[0].ptr].name;
            j["read_ptr"] = nl.cells[s.sides[1].ptr].name;
            j["write_side_known"] = s.write_side_known;
        }
        if (s.kind == SyncKind::UserDefined) j["module"] = s.module;
        arr.push_back(std::move(j));
    }
    json cls = json::object();
    for (const auto& [id, c] : sa.classes) {
        json j = {{"status", to_string(c.status)}};
        if (c.status == PairStatus::Synchronized) {
            j["sync"] = c.sync_id;
            j["kind"] = to_string(c.kind);
        }
        cls[id] = std::move(j);
    }
    return {{"syncs", arr}, {"classes", cls}};
}

} // namespace cdcv
