#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdcv/netlist.hpp"

namespace cdcv::rtl {

/// Expression tree over the supported operator set. `line` is informational
/// and ignored by equality.
struct Expr {
    enum class Kind { Ident, Number, Not, LogicNot, And, Or, Xor, Ternary, Concat, Index, Slice };

    Kind kind = Kind::Number;
    std::string name;        // Ident, Index, Slice
    std::uint64_t value = 0; // Number
    int width = -1;          // Number: -1 when unsized
    unsigned msb = 0;        // Index (bit), Slice
    unsigned lsb = 0;        // Slice
    std::vector<Expr> args;  // operands; Ternary = (cond, then, else)
    int line = 0;

    static Expr ident(std::string n, int line = 0);
    static Expr number(std::uint64_t v, int width = -1, int line = 0);
    static Expr op(Kind k, std::vector<Expr> args, int line = 0);

    friend bool operator==(const Expr& a, const Expr& b);
};

struct PortDecl {
    std::string name;
    PortDir dir = PortDir::In;
    unsigned width = 1;
    bool is_reg = false;
    int line = 0;
    friend bool operator==(const PortDecl& a, const PortDecl& b) {
        return a.name == b.name && a.dir == b.dir && a.width == b.width && a.is_reg == b.is_reg;
    }
};

struct NetDecl {
    std::string name;
    unsigned width = 1;
    bool is_reg = false;
    int line = 0;
    friend bool operator==(const NetDecl& a, const NetDecl& b) {
        return a.name == b.name && a.width == b.width && a.is_reg == b.is_reg;
    }
};

struct Assign {
    std::string target;
    Expr value;
    int line = 0;
    friend bool operator==(const Assign& a, const Assign& b) {
        return a.target == b.target && a.value == b.value;
    }
};

struct ResetSpec {
    std::string name;
    bool active_low = true;
    friend bool operator==(const ResetSpec&, const ResetSpec&) = default;
};

/// One clocked always block in canonical shape:
///   always @(posedge clk [or (neg|pos)edge rst])
///     [if (!rst) <reset_assigns> else] [if (enable)] <assigns>
struct SeqBlock {
    std::string clock;
    std::optional<ResetSpec> reset;
    std::vector<Assign> reset_assigns;
    std::optional<Expr> enable;
    std::vector<Assign> assigns;
    int line = 0;
    friend bool operator==(const SeqBlock& a, const SeqBlock& b) {
        return a.clock == b.clock && a.reset == b.reset && a.reset_assigns == b.reset_assigns &&
               a.enable == b.enable && a.assigns == b.assigns;
    }
};

struct Connection {
    std::string port;
    std::optional<Expr> expr; // empty for `.port()`
    friend bool operator==(const Connection&, const Connection&) = default;
};

struct Instance {
    std::string module;
    std::string name;
    std::vector<Connection> connections;
    int line = 0;
    friend bool operator==(const Instance& a, const Instance& b) {
        return a.module == b.module && a.name == b.name && a.connections == b.connections;
    }
};

struct ParsedModule {
    std::string name;
    std::string origin;
    int line = 0;
    std::vector<PortDecl> ports;
    std::vector<NetDecl> decls;
    std::vector<Assign> assigns;
    std::vector<SeqBlock> blocks;
    std::vector<Instance> instances;

    friend bool operator==(const ParsedModule& a, const ParsedModule& b) {
        return a.name == b.name && a.ports == b.ports && a.decls == b.decls && a.assigns == b.assigns &&
               a.blocks == b.blocks && a.instances == b.instances;
    }
};

/// Parse every module in `text`. Throws ParseError with codes SyntaxError,
/// UnsupportedConstruct, UndeclaredIdentifier or DuplicateModule.
std::vector<ParsedModule> parse_verilog(std::string_view text, const std::string& origin);

std::string to_verilog(const Expr& e);
std::string to_verilog(const ParsedModule& m);

} // namespace cdcv::rtl
