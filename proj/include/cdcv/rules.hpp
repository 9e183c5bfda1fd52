#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdcv/sync.hpp"

namespace cdcv {

struct Finding {
    std::string rule;
    Severity severity = Severity::Error;
    std::string subject;
    std::vector<std::string> pairs;   // CDC/RDC pair ids
    std::vector<std::string> syncs;   // sync instance ids
    std::vector<std::string> witness; // cell or port names along the offending structure
    std::string message;
};

/// Rule ids in catalog order.
const std::vector<std::string>& rule_catalog();
Severity default_severity(const std::string& rule);

struct Analysis {
    Netlist netlist;
    ConstraintSet constraints;
    DomainMap domains;
    std::vector<CdcPair> pairs;
    std::vector<RdcPair> rdc;
    std::vector<UnclockedCrossing> unclocked;
    SyncAnalysis syncs;
};

/// Domains, pairs and synchronizers for an elaborated netlist.
Analysis analyze(Netlist nl, const ConstraintSet& cs);

/// Run every structural rule; results ordered by (rule, subject).
std::vector<Finding> run_rules(const Analysis& a);

nlohmann::json findings_to_json(const std::vector<Finding>& f);

} // namespace cdcv
