#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdcv/constraints.hpp"
#include "cdcv/rules.hpp"

namespace cdcv {

/// Whole file contents. Throws FileError.
std::string read_file(const std::filesystem::path& p);

/// Write through a temporary and rename, so readers never see a partial file.
/// Throws FileError.
void write_file_atomic(const std::filesystem::path& p, const std::string& text);

struct DesignInput {
    std::vector<std::pair<std::string, std::string>> rtl; // origin, text
    std::string constraints;
    std::string constraints_origin = "<constraints>";
    const ConstraintSet* base = nullptr; // defaults applied before `constraints`
    std::string top;                     // inferred when empty
    bool allow_black_boxes = false;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

/// Stable hash of the elaborated netlist.
std::string netlist_fingerprint(const Netlist& nl);

/// Parse, elaborate and analyze. Throws the first parse or elaboration error.
Analysis load_design(const DesignInput& in);

} // namespace cdcv
