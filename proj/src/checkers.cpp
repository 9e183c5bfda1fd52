#include <algorithm>
#include <bit>
#include <charconv>
#include <deque>

#include "cdcv/error.hpp"
#include "sim_internal.hpp"

namespace cdcv {

const char* to_string(CheckerSpec::Kind k) {
    using K = CheckerSpec::Kind;
    switch (k) {
    case K::Stability: return "stability";
    case K::GrayCode: return "gray_code";
    case K::PulseWidth: return "pulse_width";
    case K::Static: return "static";
    case K::MuxEnable: return "mux_enable";
    case K::Fifo: return "fifo";
    case K::Latency: return "latency";
    }
    return "?";
}

std::string CheckerSpec::name() const {
    std::string n = std::string(to_string(kind)) + ":" + subject;
    if (kind == Kind::Latency) n += ":" + std::to_string(min) + ":" + std::to_string(max);
    return n;
}

CheckerSpec parse_checker(const std::string& text) {
    using K = CheckerSpec::Kind;
    auto colon = text.find(':');
    if (colon == std::string::npos || colon + 1 == text.size())
        throw Error("BadChecker", "expected <kind>:<subject>, got '" + text + "'");
    std::string kind = text.substr(0, colon);
    CheckerSpec c;
    c.subject = text.substr(colon + 1);
    static const std::map<std::string, K> kinds = {{"stability", K::Stability},  {"gray_code", K::GrayCode},
                                                   {"pulse_width", K::PulseWidth}, {"static", K::Static},
                                                   {"mux_enable", K::MuxEnable},  {"fifo", K::Fifo},
                                                   {"latency", K::Latency}};
    auto it = kinds.find(kind);
    if (it == kinds.end()) throw Error("BadChecker", "unknown checker kind '" + kind + "'");
    c.kind = it->second;
    if (c.kind == K::Latency) {
        auto p2 = c.subject.rfind(':');
        auto p1 = p2 == std::string::npos || p2 == 0 ? std::string::npos : c.subject.rfind(':', p2 - 1);
        auto num = [&](std::string_view s, unsigned& out) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc() && p == s.data() + s.size() && !s.empty();
        };
        std::string_view sv = c.subject;
        if (p1 == std::string::npos || p1 == 0 || !num(sv.substr(p1 + 1, p2 - p1 - 1), c.min) ||
            !num(sv.substr(p2 + 1), c.max) || c.min > c.max)
            throw Error("BadChecker", "expected latency:<pair>:<min>:<max> with min <= max, got '" + text + "'");
        c.subject = c.subject.substr(0, p1);
    }
    return c;
}

namespace detail {

const ClockSpec& clock_of_domain(const ConstraintSet& cs, const std::string& domain) {
    const ClockSpec* best = nullptr;
    for (const auto& c : cs.clocks)
        if (c.domain == domain && (!best || c.name < best->name)) best = &c;
    if (!best) throw Error("UnknownClock", "no clock declared for domain " + domain);
    return *best;
}

} // namespace detail

namespace {

const CdcPair& find_pair(const Analysis& a, const std::string& id) {
    for (const auto& p : a.pairs)
        if (p.id == id) return p;
    throw Error("UnknownCheckerSubject", "no crossing '" + id + "'");
}

const SyncInstance& find_sync(const Analysis& a, const std::string& id, SyncKind kind) {
    const SyncInstance* s = a.syncs.find(id);
    if (!s) throw Error("UnknownCheckerSubject", "no synchronizer '" + id + "'");
    if (s->kind != kind)
        throw Error("BadChecker", id + " is a " + to_string(s->kind) + ", not a " + to_string(kind));
    return *s;
}

std::string src_clock(const Analysis& a, const CdcPair& p) {
    if (p.src.kind == Endpoint::Kind::Flop) return a.domains.flop_clock.at(p.src.index);
    return detail::clock_of_domain(a.constraints, p.src_domain).name;
}

std::int64_t period_of(const Analysis& a, const std::string& clock) { return a.constraints.find_clock(clock)->period; }

} // namespace

ResolvedChecker resolve_checker(const Analysis& a, const CheckerSpec& c) {
    using K = CheckerSpec::Kind;
    const Netlist& nl = a.netlist;
    ResolvedChecker r;
    r.spec = c;
    switch (c.kind) {
    case K::Stability:
    case K::GrayCode:
    case K::Latency: {
        const CdcPair& p = find_pair(a, c.subject);
        r.sig = p.src_net;
        if (c.kind == K::Latency) {
            r.clock = a.domains.flop_clock.at(p.dst);
            r.observe = nl.cells[p.dst].output;
            if (const SyncInstance* s = a.syncs.entry_of(p.dst); s && !s->chain.empty() && s->chain.front() == p.dst)
                r.observe = nl.cells[s->chain.back()].output;
            if (nl.nets[r.observe].width != p.width)
                throw Error("BadChecker", "latency: synchronizer output width differs from " + p.id);
        } else {
            r.clock = src_clock(a, p);
            if (c.kind == K::GrayCode && p.width < 2) throw Error("BadChecker", "gray_code needs a multi-bit pair");
            std::int64_t pd = period_of(a, a.domains.flop_clock.at(p.dst));
            std::int64_t ps = period_of(a, r.clock);
            std::int64_t n = a.constraints.stability_cycles();
            r.samples = static_cast<unsigned>(std::max<std::int64_t>(1, (n * pd + ps - 1) / ps));
        }
        break;
    }
    case K::PulseWidth: {
        const SyncInstance& s = find_sync(a, c.subject, SyncKind::PulseToggle);
        r.sig = *s.pulse_in;
        r.clock = a.domains.flop_clock.at(*s.toggle);
        break;
    }
    case K::MuxEnable: {
        const SyncInstance& s = find_sync(a, c.subject, SyncKind::MuxEnable);
        r.select = *s.select;
        r.clock = a.domains.flop_clock.at(s.chain.back());
        for (CellId f : s.captures) {
            const Cell& fc = nl.cells[f];
            NetId d = fc.dff.data;
            for (CellId m : s.allowed) {
                const Cell& mc = nl.cells[m];
                if (mc.output == fc.dff.data) d = mc.inputs[1] == fc.output ? mc.inputs[2] : mc.inputs[1];
            }
            r.data.push_back(d);
        }
        break;
    }
    case K::Fifo: {
        const SyncInstance& s = find_sync(a, c.subject, SyncKind::AsyncFifo);
        const FifoSide& w = s.sides[0];
        const FifoSide& rd = s.sides[1];
        r.wptr = nl.cells[w.ptr].output;
        r.rq = nl.cells[rd.chain.back()].output;
        r.rptr = nl.cells[rd.ptr].output;
        r.wq = nl.cells[w.chain.back()].output;
        r.clock = a.domains.flop_clock.at(w.ptr);
        r.rclock = a.domains.flop_clock.at(rd.ptr);
        break;
    }
    case K::Static: {
        std::optional<NetId> n = nl.find_net(c.subject);
        if (!n)
            if (auto cell = nl.find_cell(c.subject)) n = nl.cells[*cell].output;
        if (!n) throw Error("UnknownCheckerSubject", "no net '" + c.subject + "'");
        r.sig = *n;
        const NetDomain& nd = a.domains.net_domain[*n];
        if (nd.kind != NetDomainKind::Single)
            throw Error("BadChecker", "static signal " + c.subject + " does not belong to a single domain");
        r.clock = detail::clock_of_domain(a.constraints, nd.domains[0]).name;
        for (const auto& rs : a.constraints.resets)
            if (rs.domain == nd.domains[0])
                if (auto p = nl.find_port(rs.net)) r.disable.emplace_back(nl.ports[*p].net, rs.active_low);
        break;
    }
    }
    return r;
}

std::vector<CheckerSpec> default_checkers(const Analysis& a) {
    using K = CheckerSpec::Kind;
    std::vector<CheckerSpec> out;
    auto width = [&](const std::string& id) {
        for (const auto& p : a.pairs)
            if (p.id == id) return p.width;
        return 1u;
    };
    for (const auto& s : a.syncs.syncs) {
        switch (s.kind) {
        case SyncKind::Ndff:
            if (s.reset_sync) break;
            for (const auto& id : s.protected_pairs) out.push_back({width(id) > 1 ? K::GrayCode : K::Stability, id});
            break;
        case SyncKind::UserDefined:
            for (const auto& id : s.protected_pairs) out.push_back({K::Stability, id});
            break;
        case SyncKind::PulseToggle: out.push_back({K::PulseWidth, s.id}); break;
        case SyncKind::MuxEnable: out.push_back({K::MuxEnable, s.id}); break;
        case SyncKind::AsyncFifo:
            out.push_back({K::Fifo, s.id});
            for (const auto& id : s.protected_pairs) out.push_back({K::GrayCode, id});
            break;
        }
    }
    for (const auto& st : a.constraints.static_signals) out.push_back({K::Static, st});
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.name() < y.name(); });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace detail {
namespace {

using Vals = std::vector<std::uint64_t>;

// Sampled history of one net on one clock.
struct History {
    std::uint64_t prev = 0;
    std::uint64_t cur = 0;
    std::uint64_t k = 0; // samples taken
    void push(std::uint64_t v) {
        prev = k ? cur : v; // $past before the first sample is the first sample
        cur = v;
        ++k;
    }
    bool changed() const { return prev != cur; }
};

class Stability : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        h_.push(pre[rc_.sig]);
        if (!h_.changed()) return;
        std::uint64_t k = h_.k - 1;
        if (last_change_ && k - *last_change_ < rc_.samples)
            fail(tick, "source changed after " + std::to_string(k - *last_change_) + " samples, needs " +
                           std::to_string(rc_.samples));
        last_change_ = k;
    }

private:
    History h_;
    std::optional<std::uint64_t> last_change_;
};

class GrayCode : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        h_.push(pre[rc_.sig]);
        if (std::popcount(h_.prev ^ h_.cur) > 1)
            fail(tick, "code changed in " + std::to_string(std::popcount(h_.prev ^ h_.cur)) + " bits");
    }

private:
    History h_;
};

class PulseWidth : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        h_.push(pre[rc_.sig] & 1);
        if (h_.prev && h_.cur) fail(tick, "pulse high for more than one source cycle");
    }

private:
    History h_;
};

class Static : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        h_.push(pre[rc_.sig]);
        for (auto [net, low] : rc_.disable)
            if ((pre[net] & 1) == (low ? 0u : 1u)) return;
        if (h_.changed()) fail(tick, "declared static signal changed");
    }

private:
    History h_;
};

class MuxEnable : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        if (hist_.empty()) hist_.resize(rc_.data.size());
        for (std::size_t i = 0; i < rc_.data.size(); ++i) {
            hist_[i].push(pre[rc_.data[i]]);
            if ((pre[rc_.select] & 1) && hist_[i].changed()) fail(tick, "data changed while select captures");
        }
    }

private:
    std::vector<History> hist_;
};

class Fifo : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string& clock, const Vals& pre, std::int64_t tick) override {
        // The same clock may serve both sides; check each that samples on it.
        if (clock == rc_.clock) {
            w_.push(pre[rc_.wptr]);
            if (full_ && w_.changed()) fail(tick, "write pointer advanced while full");
            unsigned wd = width_;
            std::uint64_t rq = pre[rc_.rq];
            std::uint64_t top = wd >= 2 ? (std::uint64_t{3} << (wd - 2)) : 1;
            full_ = pre[rc_.wptr] == (rq ^ top);
        }
        if (clock == rc_.rclock) {
            r_.push(pre[rc_.rptr]);
            if (empty_ && r_.changed()) fail(tick, "read pointer advanced while empty");
            empty_ = pre[rc_.rptr] == pre[rc_.wq];
        }
    }
    unsigned width_ = 2;

private:
    History w_, r_;
    bool full_ = false, empty_ = false;
};

class Latency : public Checker {
public:
    using Checker::Checker;
    void on_edge(const std::string&, const Vals& pre, std::int64_t tick) override {
        std::uint64_t n = src_.k;
        src_.push(pre[rc_.sig]);
        obs_.push(pre[rc_.observe]);
        if (src_.changed()) pending_.push_back({n, src_.cur});
        if (obs_.changed()) {
            auto it = std::find_if(pending_.begin(), pending_.end(), [&](auto& p) { return p.second == obs_.cur; });
            if (it != pending_.end()) {
                std::uint64_t j = n - it->first;
                if (j < rc_.spec.min || j > rc_.spec.max)
                    fail(tick, "output followed source after " + std::to_string(j) + " edges, expected " +
                                   std::to_string(rc_.spec.min) + ".." + std::to_string(rc_.spec.max));
                pending_.erase(pending_.begin(), it + 1);
            }
        }
        for (const auto& p : pending_)
            if (n - p.first > rc_.spec.max) {
                fail(tick, "output did not follow source within " + std::to_string(rc_.spec.max) + " edges");
                break;
            }
    }

private:
    History src_, obs_;
    std::deque<std::pair<std::uint64_t, std::uint64_t>> pending_;
};

} // namespace

std::vector<std::unique_ptr<Checker>> make_checkers(const Analysis& a, const std::vector<CheckerSpec>& specs) {
    using K = CheckerSpec::Kind;
    std::vector<std::unique_ptr<Checker>> out;
    for (const auto& s : specs) {
        ResolvedChecker rc = resolve_checker(a, s);
        switch (s.kind) {
        case K::Stability: out.push_back(std::make_unique<Stability>(rc)); break;
        case K::GrayCode: out.push_back(std::make_unique<GrayCode>(rc)); break;
        case K::PulseWidth: out.push_back(std::make_unique<PulseWidth>(rc)); break;
        case K::Static: out.push_back(std::make_unique<Static>(rc)); break;
        case K::MuxEnable: out.push_back(std::make_unique<MuxEnable>(rc)); break;
        case K::Latency: out.push_back(std::make_unique<Latency>(rc)); break;
        case K::Fifo: {
            auto f = std::make_unique<Fifo>(rc);
            f->width_ = a.netlist.nets[rc.wptr].width;
            out.push_back(std::move(f));
            break;
        }
        }
    }
    return out;
}

} // namespace detail
} // namespace cdcv
