#include "cdcv/coverage.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cdcv/error.hpp"

namespace cdcv {

const char* to_string(MsiKind k) { return k == MsiKind::Setup ? "Setup" : "Hold"; }

const char* to_string(Bin b) {
    switch (b) {
    case Bin::SetupTo0: return "SetupTo0";
    case Bin::SetupTo1: return "SetupTo1";
    case Bin::HoldTo0: return "HoldTo0";
    case Bin::HoldTo1: return "HoldTo1";
    }
    return "?";
}

Bin bin_of(MsiKind kind, bool resolved) {
    return static_cast<Bin>((kind == MsiKind::Hold ? 2 : 0) + (resolved ? 1 : 0));
}

std::string pairs_fingerprint(const std::vector<CdcPair>& pairs) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    };
    for (const auto& p : pairs) {
        feed(p.id);
        feed(std::to_string(p.width));
        feed(p.src_domain);
        feed(p.dst_domain);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CoverageDb CoverageDb::for_pairs(const std::vector<CdcPair>& pairs, std::string scope) {
    CoverageDb db;
    db.scope = std::move(scope);
    db.fingerprint = pairs_fingerprint(pairs);
    for (const auto& p : pairs) {
        db.pairs[p.id] = PairMeta{p.width, p.src_domain, p.dst_domain, p.suppressed.has_value()};
        db.counts[p.id].assign(p.width, BinCounts{});
    }
    return db;
}

void CoverageDb::record(const std::string& pair, unsigned bit, MsiKind kind, bool resolved) {
    auto it = counts.find(pair);
    if (it == counts.end()) throw Error("UnknownPair", pair);
    if (bit >= it->second.size()) throw Error("BadBit", pair + " has no bit " + std::to_string(bit));
    ++it->second[bit][static_cast<int>(bin_of(kind, resolved))];
}

std::uint64_t CoverageDb::count(const std::string& pair, unsigned bit, Bin b) const {
    auto it = counts.find(pair);
    if (it == counts.end()) throw Error("UnknownPair", pair);
    return it->second.at(bit)[static_cast<int>(b)];
}

std::uint64_t CoverageDb::total() const {
    std::uint64_t t = 0;
    for (const auto& [id, bits] : counts)
        for (const auto& b : bits)
            for (auto c : b) t += c;
    return t;
}

nlohmann::json CoverageDb::to_json() const {
    using nlohmann::json;
    json jp = json::object();
    for (const auto& [id, m] : pairs) {
        json bits = json::array();
        for (const auto& b : counts.at(id))
            bits.push_back({{"SetupTo0", b[0]}, {"SetupTo1", b[1]}, {"HoldTo0", b[2]}, {"HoldTo1", b[3]}});
        jp[id] = {{"width", m.width},
                  {"src_domain", m.src_domain},
                  {"dst_domain", m.dst_domain},
                  {"suppressed", m.suppressed},
                  {"bits", bits}};
    }
    return {{"format", "cdcv-coverage-1"}, {"scope", scope}, {"fingerprint", fingerprint},
            {"seeds", seeds},             {"edges", edges}, {"pairs", jp}};
}

CoverageDb CoverageDb::from_json(const nlohmann::json& j) {
    CoverageDb db;
    try {
        if (j.at("format") != "cdcv-coverage-1") throw Error("BadCoverageFile", "unknown format");
        db.scope = j.at("scope").get<std::string>();
        db.fingerprint = j.at("fingerprint").get<std::string>();
        db.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        db.edges = j.at("edges").get<std::map<std::string, std::uint64_t>>();
        for (const auto& [id, p] : j.at("pairs").items()) {
            PairMeta m{p.at("width").get<unsigned>(), p.at("src_domain").get<std::string>(),
                       p.at("dst_domain").get<std::string>(), p.at("suppressed").get<bool>()};
            auto& bits = db.counts[id];
            for (const auto& b : p.at("bits"))
                bits.push_back({b.at("SetupTo0").get<std::uint64_t>(), b.at("SetupTo1").get<std::uint64_t>(),
                                b.at("HoldTo0").get<std::uint64_t>(), b.at("HoldTo1").get<std::uint64_t>()});
            if (bits.size() != m.width) throw Error("BadCoverageFile", id + ": bit count differs from width");
            db.pairs[id] = m;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("BadCoverageFile", e.what());
    }
    return db;
}

CoverageDb merge(const CoverageDb& a, const CoverageDb& b, std::optional<std::string> scope) {
    if (a.fingerprint != b.fingerprint || a.pairs != b.pairs)
        throw Error("FingerprintMismatch", a.fingerprint + " vs " + b.fingerprint);
    CoverageDb out = a;
    // Differing scopes meet at "", which keeps merge commutative.
    if (scope) out.scope = *scope;
    else if (a.scope != b.scope) out.scope.clear();
    for (auto& [id, bits] : out.counts) {
        const auto& other = b.counts.at(id);
        for (std::size_t i = 0; i < bits.size(); ++i)
            for (int k = 0; k < 4; ++k) bits[i][k] += other[i][k];
    }
    out.seeds.insert(out.seeds.end(), b.seeds.begin(), b.seeds.end());
    std::sort(out.seeds.begin(), out.seeds.end());
    for (const auto& [clk, n] : b.edges) out.edges[clk] += n;
    return out;
}

CoverageReport coverage_report(const CoverageDb& db, const std::vector<CdcPair>& pairs) {
    if (pairs_fingerprint(pairs) != db.fingerprint)
        throw Error("FingerprintMismatch", "pairs do not match coverage fingerprint " + db.fingerprint);
    CoverageReport r;
    r.scope = db.scope;
    for (const auto& [id, m] : db.pairs) {
        if (m.suppressed) {
            r.suppressed.push_back(id);
            continue;
        }
        PairCoverage pc{id, m.width, 0, 4 * m.width, 0};
        for (const auto& b : db.counts.at(id))
            for (auto c : b) pc.bins_hit += c > 0;
        pc.percent = 100.0 * pc.bins_hit / pc.bins_total;
        if (pc.bins_hit == 0) r.zero_coverage.push_back(id);
        r.bins_hit += pc.bins_hit;
        r.bins_total += pc.bins_total;
        r.pairs.push_back(pc);
    }
    r.percent = r.bins_total ? 100.0 * r.bins_hit / r.bins_total : 0.0;
    return r;
}

nlohmann::json CoverageReport::to_json() const {
    using nlohmann::json;
    json ps = json::array();
    for (const auto& p : pairs)
        ps.push_back({{"id", p.id},
                      {"width", p.width},
                      {"bins_hit", p.bins_hit},
                      {"bins_total", p.bins_total},
                      {"percent", p.percent}});
    return {{"scope", scope},
            {"pairs", ps},
            {"suppressed", suppressed},
            {"zero_coverage", zero_coverage},
            {"bins_hit", bins_hit},
            {"bins_total", bins_total},
            {"percent", percent}};
}

std::string CoverageReport::to_text() const {
    std::ostringstream os;
    char line[256];
    os << "scope: " << (scope.empty() ? "-" : scope) << "\n";
    for (const auto& p : pairs) {
        std::snprintf(line, sizeof line, "  %-40s %3u/%-3u %6.1f%%\n", p.id.c_str(), p.bins_hit, p.bins_total,
                      p.percent);
        os << line;
    }
    std::snprintf(line, sizeof line, "total %u/%u bins, %.1f%%\n", bins_hit, bins_total, percent);
    os << line;
    if (!zero_coverage.empty()) {
        os << "zero coverage:";
        for (const auto& z : zero_coverage) os << " " << z;
        os << "\n";
    }
    if (!suppressed.empty()) {
        os << "suppressed:";
        for (const auto& s : suppressed) os << " " << s;
        os << "\n";
    }
    return os.str();
}

} // namespace cdcv
