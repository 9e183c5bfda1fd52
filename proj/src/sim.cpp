#include <algorithm>
#include <climits>
#include <random>

#include "cdcv/error.hpp"
#include "sim_internal.hpp"

namespace cdcv {

void MsiConfig::validate() const {
    if (!(probability >= 0.0 && probability <= 1.0)) throw Error("BadMsiConfig", "probability must lie in [0,1]");
    for (const auto& [id, p] : pair_probability)
        if (!(p >= 0.0 && p <= 1.0)) throw Error("BadMsiConfig", "probability for " + id + " must lie in [0,1]");
    if ((setup_window && *setup_window < 0) || (hold_window && *hold_window < 0))
        throw Error("BadMsiConfig", "windows must be non-negative");
    if (mode == Mode::Exhaustive && max_decisions > 24) throw Error("BadMsiConfig", "max_decisions is capped at 24");
}

std::uint64_t SimTrace::value_at(NetId net, std::int64_t tick) const {
    const auto& w = waves.at(net);
    auto it = std::upper_bound(w.begin(), w.end(), tick, [](std::int64_t t, const Change& c) { return t < c.tick; });
    return it == w.begin() ? 0 : std::prev(it)->value;
}

const Verdict* SimTrace::verdict(const std::string& checker) const {
    for (const auto& v : verdicts)
        if (v.checker == checker) return &v;
    return nullptr;
}

namespace detail {

namespace {

using Vals = std::vector<std::uint64_t>;
constexpr std::int64_t kNone = INT64_MIN;

std::uint64_t eval_cell(const Netlist& nl, const Cell& c, const Vals& v) {
    std::uint64_t m = width_mask(nl.nets[c.output].width);
    if (c.is_const()) return c.value & m;
    const auto& in = c.inputs;
    switch (c.op) {
    case GateOp::And: {
        std::uint64_t r = ~std::uint64_t{0};
        for (NetId n : in) r &= v[n];
        return r & m;
    }
    case GateOp::Or: {
        std::uint64_t r = 0;
        for (NetId n : in) r |= v[n];
        return r & m;
    }
    case GateOp::Xor: {
        std::uint64_t r = 0;
        for (NetId n : in) r ^= v[n];
        return r & m;
    }
    case GateOp::Not: return ~v[in[0]] & m;
    case GateOp::Buf: return v[in[0]] & m;
    case GateOp::Mux: return ((v[in[0]] & 1) ? v[in[1]] : v[in[2]]) & m;
    case GateOp::Concat: {
        std::uint64_t r = 0;
        for (NetId n : in) {
            unsigned w = nl.nets[n].width;
            r = (w >= 64 ? 0 : r << w) | (v[n] & width_mask(w));
        }
        return r & m;
    }
    case GateOp::Slice: return (v[in[0]] >> c.slice_lsb) & m;
    }
    return 0;
}

struct ClockInfo {
    const ClockSpec* spec = nullptr;
    NetId net = 0;
    bool has_port = false;
    std::uint64_t edges = 0;

    bool level(std::int64_t t) const {
        if (t < spec->phase) return false;
        return (t - spec->phase) % spec->period < spec->period / 2;
    }
    bool event(std::int64_t t) const {
        if (t < spec->phase) return false;
        auto r = (t - spec->phase) % spec->period;
        return r == 0 || r == spec->period / 2;
    }
    std::int64_t next_rise(std::int64_t t) const {
        if (t < spec->phase) return spec->phase;
        return spec->phase + ((t - spec->phase) / spec->period + 1) * spec->period;
    }
    std::int64_t edge_tick(std::uint64_t n) const {
        return spec->phase + static_cast<std::int64_t>(n - 1) * spec->period;
    }
};

// All crossings into one pin of one capture flop.
struct Group {
    CellId dst = 0;
    PinKind pin = PinKind::Data;
    NetId pin_net = 0;
    unsigned width = 1;
    struct Src {
        Endpoint e;
        NetId net = 0;
        std::string pair;
        int clock = -1; // flop sources: index into clocks
    };
    std::vector<Src> srcs;
    std::vector<CellId> cells; // cone, dependency order
    std::vector<NetId> leaves;
    std::vector<std::int64_t> last_u;
    std::vector<std::uint8_t> old_bit;
    std::vector<int> cause;
    std::int64_t prev_edge = kNone;
};

struct Captured {
    CellId f = 0;
    std::uint64_t q_old = 0, d = 0, en = 1;
    std::vector<std::pair<std::size_t, unsigned>> hold; // (group, bit) candidates
};

class Simulator {
public:
    Simulator(const Analysis& a, const Stimulus& s, const MsiConfig& cfg, const std::vector<CheckerSpec>& checkers,
              Decider& dec)
        : a_(a), nl_(a.netlist), st_(s), cfg_(cfg), dec_(dec) {
        sw_ = cfg.setup_window.value_or(a.constraints.setup_window());
        hw_ = cfg.hold_window.value_or(a.constraints.hold_window());
        order_ = comb_order(nl_);
        flops_ = nl_.dffs();
        checkers_ = make_checkers(a, checkers);
        setup_clocks();
        if (cfg_.enabled) setup_groups();
        result_.coverage = CoverageDb::for_pairs(a.pairs);
        if (cfg_.mode == MsiConfig::Mode::Random && cfg_.enabled) result_.coverage.seeds.push_back(cfg_.seed);
    }

    SimResult run();

private:
    void setup_clocks();
    void setup_groups();
    void eval_comb() {
        for (CellId c : order_) val_[nl_.cells[c].output] = eval_cell(nl_, nl_.cells[c], val_);
    }
    bool reset_on(const Cell& f, const Vals& v) const {
        return f.dff.reset && (v[*f.dff.reset] & 1) == (f.dff.reset_active_low ? 0u : 1u);
    }
    std::uint64_t reset_value(const Cell& f) const { return f.dff.reset_value & width_mask(nl_.nets[f.output].width); }
    std::uint64_t next_state(const Cell& f, const Vals& v) const {
        if (reset_on(f, v)) return reset_value(f);
        if (f.dff.enable && !(v[*f.dff.enable] & 1)) return v[f.output];
        return v[f.dff.data];
    }
    void async_resets();
    void set_input(NetId net, std::uint64_t value) { val_[net] = value; }
    void apply_stimulus(int clock, std::int64_t t);
    std::vector<Captured> capture(const std::vector<CellId>& fs, const Vals& pre, std::int64_t t);
    bool setup_opportunity(Group& g, unsigned b, std::uint64_t cur, std::int64_t t, std::uint64_t& resolved);
    void hold_phase(std::vector<Captured>& caps, std::int64_t t);
    std::uint64_t eval_group(const Group& g, const std::vector<std::pair<NetId, std::uint64_t>>& over,
                             const Vals& base);
    void track_foreign(const Vals& pre, std::int64_t t);
    void log(std::int64_t t, const std::string& pair, unsigned bit, MsiKind k, bool v) {
        result_.trace.msi.push_back({t, pair, bit, k, v});
        result_.coverage.record(pair, bit, k, v);
    }
    bool decide(const std::string& pair) {
        bool d = dec_.decide(pair);
        result_.decisions.push_back(d);
        return d;
    }
    void record(std::int64_t t) {
        for (NetId n = 0; n < val_.size(); ++n) {
            auto& w = result_.trace.waves[n];
            if (w.empty() || w.back().value != val_[n]) {
                if (!w.empty() && w.back().tick == t)
                    w.back().value = val_[n];
                else
                    w.push_back({t, val_[n]});
            }
        }
    }

    const Analysis& a_;
    const Netlist& nl_;
    const Stimulus& st_;
    const MsiConfig& cfg_;
    Decider& dec_;
    std::int64_t sw_ = 1, hw_ = 1;
    std::vector<CellId> order_;
    std::vector<CellId> flops_;
    std::vector<std::unique_ptr<Checker>> checkers_;
    std::vector<ClockInfo> clocks_;
    std::map<std::string, int> clock_index_;
    std::vector<NetId> clock_nets_; // nets on flop clock pins
    std::vector<std::uint8_t> clk_seen_;
    std::vector<Group> groups_;
    std::vector<std::vector<std::size_t>> groups_of_; // by CellId
    std::vector<std::mt19937_64> random_rng_;
    std::vector<int> random_clock_;
    Vals val_, tmp_;
    SimResult result_;
};

void Simulator::setup_clocks() {
    for (const auto& c : a_.constraints.clocks) {
        ClockInfo ci;
        ci.spec = &c;
        if (auto p = nl_.find_port(c.name); p && nl_.ports[*p].dir == PortDir::In) {
            ci.net = nl_.ports[*p].net;
            ci.has_port = true;
        }
        clock_index_[c.name] = static_cast<int>(clocks_.size());
        clocks_.push_back(ci);
    }
    std::set<NetId> cn;
    for (CellId f : flops_) cn.insert(nl_.cells[f].dff.clock);
    clock_nets_.assign(cn.begin(), cn.end());
    clk_seen_.assign(nl_.nets.size(), 0);
    for (const auto& r : st_.random) {
        random_rng_.emplace_back(r.seed);
        random_clock_.push_back(r.clock.empty() ? 0 : clock_index_.at(r.clock));
    }
}

void Simulator::setup_groups() {
    groups_of_.resize(nl_.cells.size());
    std::map<std::pair<CellId, PinKind>, std::size_t> idx;
    for (const auto& p : a_.pairs) {
        if (p.suppressed) continue;
        auto key = std::make_pair(p.dst, p.pin);
        auto [it, fresh] = idx.emplace(key, groups_.size());
        if (fresh) {
            Group g;
            g.dst = p.dst;
            g.pin = p.pin;
            g.pin_net = p.pin_net;
            g.width = nl_.nets[p.pin_net].width;
            g.last_u.assign(g.width, kNone);
            g.old_bit.assign(g.width, 0);
            g.cause.assign(g.width, 0);
            Cone cone = fanin_cone(nl_, p.pin_net, true);
            std::set<CellId> cells(cone.comb.begin(), cone.comb.end());
            cells.insert(cone.consts.begin(), cone.consts.end());
            for (CellId c : order_)
                if (cells.count(c)) g.cells.push_back(c);
            for (CellId f : cone.sequential) g.leaves.push_back(nl_.cells[f].output);
            for (PortId pt : cone.ports) g.leaves.push_back(nl_.ports[pt].net);
            for (NetId n = 0; n < nl_.nets.size(); ++n)
                if (nl_.nets[n].driver.kind == DriverKind::BlackBox && cone.boxes.count(nl_.nets[n].driver.index))
                    g.leaves.push_back(n);
            groups_.push_back(std::move(g));
            groups_of_[p.dst].push_back(groups_.size() - 1);
        }
        Group::Src s{p.src, p.src_net, p.id, -1};
        if (p.src.kind == Endpoint::Kind::Flop) s.clock = clock_index_.at(a_.domains.flop_clock.at(p.src.index));
        groups_[it->second].srcs.push_back(s);
    }
    // Enable groups first so the data decision sees the final enable.
    for (auto& v : groups_of_)
        std::sort(v.begin(), v.end(),
                  [&](std::size_t x, std::size_t y) { return groups_[x].pin == PinKind::Enable && groups_[y].pin != PinKind::Enable; });
}

void Simulator::async_resets() {
    for (std::size_t iter = 0; iter <= flops_.size(); ++iter) {
        bool changed = false;
        for (CellId f : flops_) {
            const Cell& c = nl_.cells[f];
            if (reset_on(c, val_) && val_[c.output] != reset_value(c)) {
                val_[c.output] = reset_value(c);
                changed = true;
            }
        }
        if (!changed) return;
        eval_comb();
    }
}

void Simulator::apply_stimulus(int clock, std::int64_t) {
    std::uint64_t edge = clocks_[clock].edges;
    for (std::size_t i = 0; i < st_.random.size(); ++i) {
        if (random_clock_[i] != clock) continue;
        const RandomDriver& r = st_.random[i];
        for (const auto& pn : r.ports) {
            const Port& p = nl_.ports[*nl_.find_port(pn)];
            std::uint64_t v = val_[p.net];
            for (unsigned b = 0; b < p.width; ++b) {
                double u = static_cast<double>(random_rng_[i]() >> 11) * 0x1.0p-53;
                if (u < r.p) v ^= std::uint64_t{1} << b;
            }
            set_input(p.net, v);
        }
    }
    const std::string& name = clocks_[clock].spec->name;
    for (const auto& s : st_.sets)
        if (s.clock == name && s.edge == edge) set_input(nl_.ports[*nl_.find_port(s.port)].net, s.value);
}

std::uint64_t Simulator::eval_group(const Group& g, const std::vector<std::pair<NetId, std::uint64_t>>& over,
                                    const Vals& base) {
    for (NetId n : g.leaves) tmp_[n] = base[n];
    for (auto [n, v] : over) tmp_[n] = v;
    for (CellId c : g.cells) tmp_[nl_.cells[c].output] = eval_cell(nl_, nl_.cells[c], tmp_);
    return tmp_[g.pin_net];
}

bool Simulator::setup_opportunity(Group& g, unsigned b, std::uint64_t cur, std::int64_t t, std::uint64_t& resolved) {
    std::int64_t u = g.last_u[b];
    if (u == kNone || u >= t) return false;
    if (g.prev_edge != kNone && u < g.prev_edge) return false;
    if (!(u >= t - sw_ || u == g.prev_edge)) return false;
    std::uint64_t old = g.old_bit[b];
    if (old == ((cur >> b) & 1)) return false;
    const std::string& pair = g.srcs[g.cause[b]].pair;
    if (!decide(pair)) return false;
    resolved = old;
    log(t, pair, b, MsiKind::Setup, old != 0);
    return true;
}

std::vector<Captured> Simulator::capture(const std::vector<CellId>& fs, const Vals& pre, std::int64_t t) {
    std::vector<Captured> caps;
    std::vector<std::pair<NetId, std::uint64_t>> next;
    for (CellId f : fs) {
        const Cell& c = nl_.cells[f];
        Captured cap;
        cap.f = f;
        cap.q_old = pre[c.output];
        if (reset_on(c, pre)) {
            next.emplace_back(c.output, reset_value(c));
            continue;
        }
        cap.en = c.dff.enable ? (pre[*c.dff.enable] & 1) : 1;
        cap.d = pre[c.dff.data];
        if (cfg_.enabled && !groups_of_.empty()) {
            for (std::size_t gi : groups_of_[f]) {
                Group& g = groups_[gi];
                bool is_en = g.pin == PinKind::Enable;
                if (!is_en && !cap.en) continue;
                std::uint64_t& word = is_en ? cap.en : cap.d;
                for (unsigned b = 0; b < g.width; ++b) {
                    std::uint64_t r = 0;
                    if (setup_opportunity(g, b, word, t, r)) {
                        word = (word & ~(std::uint64_t{1} << b)) | (r << b);
                    } else {
                        cap.hold.emplace_back(gi, b);
                    }
                }
            }
            for (std::size_t gi : groups_of_[f]) groups_[gi].prev_edge = t;
        }
        next.emplace_back(c.output, cap.en ? cap.d : cap.q_old);
        caps.push_back(std::move(cap));
    }
    for (auto [n, v] : next) val_[n] = v;
    return caps;
}

void Simulator::hold_phase(std::vector<Captured>& caps, std::int64_t t) {
    bool any = false;
    for (auto& cap : caps) {
        if (cap.hold.empty()) continue;
        const Cell& fc = nl_.cells[cap.f];
        bool changed = false;
        for (auto [gi, b] : cap.hold) {
            Group& g = groups_[gi];
            bool is_en = g.pin == PinKind::Enable;
            if (!is_en && !cap.en) continue;
            std::vector<std::pair<NetId, std::uint64_t>> over;
            std::vector<std::size_t> movers;
            for (std::size_t si = 0; si < g.srcs.size(); ++si) {
                const auto& s = g.srcs[si];
                if (s.clock < 0 || clocks_[s.clock].next_rise(t) > t + hw_) continue;
                std::uint64_t ns = next_state(nl_.cells[s.e.index], val_);
                if (ns == val_[s.net]) continue;
                over.emplace_back(s.net, ns);
                movers.push_back(si);
            }
            if (over.empty()) continue;
            std::uint64_t up = eval_group(g, over, val_);
            std::uint64_t& word = is_en ? cap.en : cap.d;
            std::uint64_t upbit = (up >> b) & 1;
            if (!(((up ^ val_[g.pin_net]) >> b) & 1) || upbit == ((word >> b) & 1)) continue;
            std::size_t cause = movers.front();
            if (movers.size() > 1)
                for (std::size_t si : movers) {
                    std::uint64_t one = eval_group(g, {{g.srcs[si].net, next_state(nl_.cells[g.srcs[si].e.index], val_)}}, val_);
                    if ((((one ^ val_[g.pin_net]) >> b) & 1)) {
                        cause = si;
                        break;
                    }
                }
            const std::string& pair = g.srcs[cause].pair;
            if (!decide(pair)) continue;
            word = (word & ~(std::uint64_t{1} << b)) | (upbit << b);
            log(t, pair, b, MsiKind::Hold, upbit != 0);
            changed = true;
        }
        if (changed) {
            val_[fc.output] = cap.en ? cap.d : cap.q_old;
            any = true;
        }
    }
    if (any) {
        eval_comb();
        async_resets();
    }
}

void Simulator::track_foreign(const Vals& pre, std::int64_t t) {
    for (auto& g : groups_) {
        std::vector<std::pair<NetId, std::uint64_t>> over;
        std::vector<std::size_t> movers;
        for (std::size_t si = 0; si < g.srcs.size(); ++si)
            if (pre[g.srcs[si].net] != val_[g.srcs[si].net]) {
                over.emplace_back(g.srcs[si].net, val_[g.srcs[si].net]);
                movers.push_back(si);
            }
        if (over.empty()) continue;
        std::uint64_t mixed = eval_group(g, over, pre);
        std::uint64_t diff = mixed ^ pre[g.pin_net];
        for (unsigned b = 0; b < g.width; ++b) {
            if (!((diff >> b) & 1)) continue;
            g.last_u[b] = t;
            g.old_bit[b] = (pre[g.pin_net] >> b) & 1;
            g.cause[b] = static_cast<int>(movers.front());
            if (movers.size() > 1)
                for (std::size_t si : movers) {
                    std::uint64_t one = eval_group(g, {{g.srcs[si].net, val_[g.srcs[si].net]}}, pre);
                    if (((one ^ pre[g.pin_net]) >> b) & 1) {
                        g.cause[b] = static_cast<int>(si);
                        break;
                    }
                }
        }
    }
}

SimResult Simulator::run() {
    std::int64_t end = 0;
    if (st_.run_edges) {
        const auto& [n, clk] = *st_.run_edges;
        auto it = clock_index_.find(clk);
        if (it == clock_index_.end()) throw Error("UnknownClock", clk);
        if (n == 0) throw Error("StimulusOutOfRange", "run length must be at least one edge");
        end = clocks_[it->second].edge_tick(n);
    } else if (st_.run_ticks) {
        end = *st_.run_ticks;
    } else {
        throw Error("MissingRunLength", st_.origin + ": no run directive");
    }
    for (const auto& s : st_.sets) {
        auto it = clock_index_.find(s.clock);
        if (it == clock_index_.end()) throw Error("UnknownClock", s.clock);
        if (s.edge > 0 && clocks_[it->second].edge_tick(s.edge) > end)
            throw Error("StimulusOutOfRange", st_.origin + ":" + std::to_string(s.line) + ": edge " +
                                                  std::to_string(s.edge) + " of " + s.clock + " is past the run end");
    }

    val_.assign(nl_.nets.size(), 0);
    tmp_.assign(nl_.nets.size(), 0);
    result_.trace.waves.assign(nl_.nets.size(), {});
    for (CellId f : flops_) val_[nl_.cells[f].output] = reset_value(nl_.cells[f]);
    for (const auto& s : st_.sets)
        if (s.edge == 0) set_input(nl_.ports[*nl_.find_port(s.port)].net, s.value);
    eval_comb();
    async_resets();
    for (NetId n : clock_nets_) clk_seen_[n] = val_[n] & 1;
    record(-1);

    for (std::int64_t t = 0; t <= end; ++t) {
        bool ev = false;
        for (const auto& c : clocks_) ev = ev || c.event(t);
        if (!ev) continue;
        Vals pre = val_;
        std::vector<int> rising;
        for (std::size_t i = 0; i < clocks_.size(); ++i) {
            auto& c = clocks_[i];
            bool lv = c.level(t);
            bool was = c.has_port ? (pre[c.net] & 1) != 0 : (t > c.spec->phase && c.level(t - 1));
            if (lv && !was) {
                rising.push_back(static_cast<int>(i));
                ++c.edges;
            }
            if (c.has_port) val_[c.net] = lv;
        }
        eval_comb();
        for (int ci : rising) {
            const std::string& name = clocks_[ci].spec->name;
            for (auto& ch : checkers_)
                if (ch->samples(name)) ch->on_edge(name, pre, t);
        }

        std::vector<CellId> trig;
        for (CellId f : flops_) {
            NetId cn = nl_.cells[f].dff.clock;
            if (!clk_seen_[cn] && (val_[cn] & 1)) trig.push_back(f);
        }
        for (NetId n : clock_nets_) clk_seen_[n] = val_[n] & 1;
        auto caps = capture(trig, pre, t);
        eval_comb();
        for (int ci : rising) apply_stimulus(ci, t);
        eval_comb();
        async_resets();

        for (int delta = 0; delta < 16; ++delta) {
            std::vector<CellId> more;
            for (CellId f : flops_) {
                NetId cn = nl_.cells[f].dff.clock;
                if (!clk_seen_[cn] && (val_[cn] & 1)) more.push_back(f);
            }
            for (NetId n : clock_nets_) clk_seen_[n] = val_[n] & 1;
            if (more.empty()) break;
            Vals dpre = val_;
            auto c2 = capture(more, dpre, t);
            caps.insert(caps.end(), std::make_move_iterator(c2.begin()), std::make_move_iterator(c2.end()));
            eval_comb();
            async_resets();
        }
        if (cfg_.enabled) {
            hold_phase(caps, t);
            track_foreign(pre, t);
        }
        record(t);
    }

    SimTrace& tr = result_.trace;
    tr.end_tick = end;
    for (const auto& c : clocks_) tr.edges[c.spec->name] = c.edges;
    result_.coverage.edges = tr.edges;
    for (const auto& ch : checkers_) tr.verdicts.push_back(ch->verdict());
    std::sort(tr.verdicts.begin(), tr.verdicts.end(),
              [](const Verdict& x, const Verdict& y) { return x.checker < y.checker; });
    for (const auto& e : tr.msi)
        if (std::find_if(a_.pairs.begin(), a_.pairs.end(), [&](const CdcPair& p) {
                return p.id == e.pair && !p.suppressed;
            }) == a_.pairs.end())
            throw Error("SimDivergence", "MSI event on suppressed or unknown pair " + e.pair);
    return std::move(result_);
}

} // namespace

SimResult run_with(const Analysis& a, const Stimulus& s, const MsiConfig& msi,
                   const std::vector<CheckerSpec>& checkers, Decider& d) {
    return Simulator(a, s, msi, checkers, d).run();
}

} // namespace detail

SimResult simulate(const Analysis& a, const Stimulus& s, const MsiConfig& msi, const std::vector<CheckerSpec>& checkers) {
    msi.validate();
    check_stimulus(s, a.netlist, a.constraints);
    detail::RandomDecider d(msi);
    return detail::run_with(a, s, msi, checkers, d);
}

SimTrace reference_simulate(const Analysis& a, const Stimulus& s, const std::vector<CheckerSpec>& checkers) {
    MsiConfig off;
    off.enabled = false;
    return simulate(a, s, off, checkers).trace;
}

} // namespace cdcv
