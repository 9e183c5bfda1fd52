#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdcv/domains.hpp"

namespace cdcv {

enum class MsiKind { Setup, Hold };
const char* to_string(MsiKind k);

/// Coverage bins per destination bit, in storage order.
enum class Bin { SetupTo0 = 0, SetupTo1 = 1, HoldTo0 = 2, HoldTo1 = 3 };
const char* to_string(Bin b);
Bin bin_of(MsiKind kind, bool resolved);

struct PairMeta {
    unsigned width = 1;
    std::string src_domain;
    std::string dst_domain;
    bool suppressed = false;
    bool operator==(const PairMeta&) const = default;
};

using BinCounts = std::array<std::uint64_t, 4>;

/// Stable hash of the pair set (ids, widths, domains), hex encoded.
std::string pairs_fingerprint(const std::vector<CdcPair>& pairs);

struct CoverageDb {
    std::string scope;
    std::string fingerprint;
    std::map<std::string, PairMeta> pairs;
    std::map<std::string, std::vector<BinCounts>> counts; // pair id -> per bit
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::uint64_t> edges; // clock -> edges simulated

    static CoverageDb for_pairs(const std::vector<CdcPair>& pairs, std::string scope = "");

    /// Throws UnknownPair, or BadBit when `bit` is outside the pair width.
    void record(const std::string& pair, unsigned bit, MsiKind kind, bool resolved);
    std::uint64_t count(const std::string& pair, unsigned bit, Bin b) const;
    std::uint64_t total() const;

    nlohmann::json to_json() const;
    static CoverageDb from_json(const nlohmann::json& j);

    bool operator==(const CoverageDb&) const = default;
};

/// Counter-wise sum; seeds are kept sorted and differing scopes become "".
/// Throws FingerprintMismatch.
CoverageDb merge(const CoverageDb& a, const CoverageDb& b, std::optional<std::string> scope = std::nullopt);

struct PairCoverage {
    std::string id;
    unsigned width = 1;
    unsigned bins_hit = 0;
    unsigned bins_total = 0;
    double percent = 0;
};

struct CoverageReport {
    std::string scope;
    std::vector<PairCoverage> pairs;        // unsuppressed, sorted by id
    std::vector<std::string> suppressed;
    std::vector<std::string> zero_coverage;
    unsigned bins_hit = 0;
    unsigned bins_total = 0;
    double percent = 0;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Throws FingerprintMismatch when `pairs` is not the set `db` was made for.
CoverageReport coverage_report(const CoverageDb& db, const std::vector<CdcPair>& pairs);

} // namespace cdcv
