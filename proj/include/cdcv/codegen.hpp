#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdcv/rules.hpp"
#include "cdcv/sim.hpp"

namespace cdcv {

struct GeneratedFile {
    std::string path;                 // relative to the output directory
    std::string text;
    std::string generator;            // ndff_sync_check, ..., coverage, bind
    std::vector<std::string> sources; // sync ids, pair ids, constraint entries
    std::string module;               // module defined in the file, if any
    std::vector<std::pair<std::string, std::string>> binds; // port -> design signal
};

/// One checker module per synchronizer that has runtime checkers, plus
/// gen/checks/signal_config_check/signal_config.sv for static and false-path
/// declarations. Throws NameCollision, UnresolvedSignal.
std::vector<GeneratedFile> generate_checks(const Analysis& a);

/// gen/coverage/cdc_cov.sv with one covergroup per unsuppressed pair.
/// Returns a file with no covergroups when there are none.
GeneratedFile generate_coverage_model(const Analysis& a);

/// gen/bind_all.sv binding every checker module into the top module.
GeneratedFile generate_bind_all(const Analysis& a, const std::vector<GeneratedFile>& checks);

/// Checks, coverage and bind file; empty when there is nothing to check.
std::vector<GeneratedFile> generate_all(const Analysis& a);

/// Assertion property names emitted for a runtime checker (Fifo has two).
std::vector<std::string> property_names(const CheckerSpec& c);

/// Identifier form of an arbitrary name: every other character becomes '_'.
std::string sv_ident(const std::string& name);

struct LintIssue {
    std::string file;
    int line = 0;
    std::string message;
};

/// Syntactic lint of generated files: header, balanced blocks, declared
/// identifiers, bind targets resolving in the netlist.
std::vector<LintIssue> lint_generated(const std::vector<GeneratedFile>& files, const Netlist& nl);

struct PropertyVerdict {
    bool pass = true;
    std::int64_t tick = -1; // first failing sample
};

/// Evaluate every property in `files` over a simulation trace, with ports
/// connected as in the bind file. Throws SvaError on text outside the
/// template vocabulary.
std::map<std::string, PropertyVerdict> interpret_assertions(const std::vector<GeneratedFile>& files,
                                                            const Analysis& a, const SimTrace& t);

} // namespace cdcv
