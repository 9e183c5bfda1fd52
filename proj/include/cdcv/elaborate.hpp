#pragma once

#include <string>
#include <vector>

#include "cdcv/netlist.hpp"
#include "cdcv/verilog.hpp"

namespace cdcv {

struct ElaborateOptions {
    /// Instances of undefined modules become black boxes instead of raising
    /// UnresolvedModule. Nets connected to a box that have no other driver
    /// are treated as box outputs.
    bool allow_black_boxes = false;
};

/// Flatten `top` and everything it instantiates into one Netlist. Instance
/// contents get hierarchical names (`inst.sub.net`); port connections merge
/// nets, keeping the topmost name as canonical.
///
/// Errors: UnknownTop, UnresolvedModule, RecursiveInstantiation,
/// PortWidthMismatch, UnknownPort, WidthMismatch, NonConstantReset,
/// MultipleAssignments, plus any validation failure (MultipleDrivers, ...).
Netlist elaborate(const std::vector<rtl::ParsedModule>& modules, const std::string& top,
                  const ElaborateOptions& options = {});

/// The unique module that no other module instantiates. Throws AmbiguousTop.
std::string infer_top(const std::vector<rtl::ParsedModule>& modules);

} // namespace cdcv
