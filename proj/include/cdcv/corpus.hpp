#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdcv/sim.hpp"

namespace cdcv {

/// Ground truth for one corpus case (labels.json).
struct CaseLabels {
    std::string kind;   // bug, clean or scheme
    std::string twin;   // bug <-> clean partner
    std::string bug;    // taxonomy class, bug cases only
    bool allow_black_boxes = false;
    std::set<std::string> findings;           // rule ids, exact
    std::map<std::string, std::string> syncs; // sync id -> kind, exact
    std::vector<std::string> checks;          // extra checkers beyond the defaults
    std::set<std::string> reference_fail;     // failing checkers, MSI off
    struct Msi {
        std::uint64_t first_seed = 1, last_seed = 20;
        double probability = 0.5;
        std::set<std::string> fail; // union over seeds
    } msi;
    struct Explore {
        unsigned max_decisions = 16;
        bool budget_exceeded = false;
        std::set<std::string> fail;
    };
    std::optional<Explore> explore;
    struct Coverage {
        std::uint64_t first_seed = 1, last_seed = 20;
        unsigned min_bins = 0; // distinct (pair, bit, bin) hit after merging
    };
    std::optional<Coverage> coverage;
};

/// Throws MissingLabel when a required field is absent or malformed.
CaseLabels parse_labels(const nlohmann::json& j, const std::string& origin);

struct CorpusCase {
    std::string name;
    std::filesystem::path dir;
    CaseLabels labels;
};

/// Cases under `root` whose name contains `filter`, sorted by name.
/// Directories missing a required file still load; the runner reports them.
std::vector<std::string> list_cases(const std::filesystem::path& root, const std::string& filter = "");

struct LoadedCase {
    CaseLabels labels;
    Analysis analysis;
    Stimulus stimulus;
};

/// Parse labels, design and stimulus of one case. Throws on any error.
LoadedCase load_case(const std::filesystem::path& root, const std::string& name);

struct CorpusCheck {
    std::string case_name;
    std::string expectation;
    bool pass = false;
    std::string detail;
};

struct CorpusReport {
    std::vector<CorpusCheck> checks; // ordered by case, then expectation
    bool ok() const;
    nlohmann::json to_json() const;
};

/// Check every labeled expectation of one case.
std::vector<CorpusCheck> run_case(const std::filesystem::path& root, const std::string& name);

/// Run all matching cases in parallel, plus the taxonomy totality check
/// (corpus/taxonomy.json) when no filter is given.
CorpusReport run_corpus(const std::filesystem::path& root, const std::string& filter = "", unsigned threads = 0);

/// Failing checker names of a trace.
std::set<std::string> failing(const SimTrace& t);

} // namespace cdcv
