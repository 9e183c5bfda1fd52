#include "cdcv/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cdcv/elaborate.hpp"
#include "cdcv/error.hpp"

namespace cdcv {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("FileError", "cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(const std::filesystem::path& p, const std::string& text) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("FileError", "cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error("FileError", "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, p, ec);
    if (ec) throw Error("FileError", "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string netlist_fingerprint(const Netlist& nl) { return fnv1a_hex(nl.to_json().dump()); }

Analysis load_design(const DesignInput& in) {
    std::vector<rtl::ParsedModule> mods;
    std::set<std::string> seen;
    for (const auto& [origin, text] : in.rtl)
        for (auto& m : rtl::parse_verilog(text, origin)) {
            if (!seen.insert(m.name).second) throw Error("DuplicateModule", "module " + m.name + " defined twice");
            mods.push_back(std::move(m));
        }
    ConstraintSet cs = parse_constraints(in.constraints, in.constraints_origin, in.base);
    std::string top = in.top.empty() ? infer_top(mods) : in.top;
    ElaborateOptions eo;
    eo.allow_black_boxes = in.allow_black_boxes;
    return analyze(elaborate(mods, top, eo), cs);
}

} // namespace cdcv
