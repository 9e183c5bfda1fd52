#include <doctest.h>

#include <filesystem>
#include <functional>
#include <map>
#include <random>

#include "cdcv/constraints.hpp"
#include "cdcv/elaborate.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"
#include "cdcv/stimulus.hpp"
#include "random_design.hpp"

using namespace cdcv;

namespace {

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

Netlist elab(const std::string& rtl, const ElaborateOptions& o = {}) {
    auto mods = rtl::parse_verilog(rtl, "t.v");
    return elaborate(mods, infer_top(mods), o);
}

std::size_t count_dffs(const Netlist& nl) {
    std::size_t n = 0;
    for (const auto& c : nl.cells) n += c.is_dff();
    return n;
}

} // namespace

// ---- parser ----------------------------------------------------------------

TEST_CASE("parser: single flop module") {
    auto ms = rtl::parse_verilog("module m(input clk, input d, output reg q); always @(posedge clk) q <= d; endmodule",
                                 "m.v");
    REQUIRE(ms.size() == 1);
    REQUIRE(ms[0].blocks.size() == 1);
    CHECK(ms[0].blocks[0].clock == "clk");
    CHECK(ms[0].blocks[0].assigns.size() == 1);
}

TEST_CASE("parser: two chained nonblocking assigns in one block") {
    auto ms = rtl::parse_verilog(R"(
module s(input clk, input d, output q);
  reg f1, f2;
  always @(posedge clk) begin f1 <= d; f2 <= f1; end
  assign q = f2;
endmodule)", "s.v");
    REQUIRE(ms[0].blocks.size() == 1);
    CHECK(ms[0].blocks[0].assigns.size() == 2);
}

TEST_CASE("parser: errors carry positions") {
    try {
        rtl::parse_verilog("module m(input clk);\n  reg r;\n  initial begin r = 0; end\nendmodule\n", "i.v");
        FAIL("expected UnsupportedConstruct");
    } catch (const ParseError& e) {
        CHECK(e.code() == "UnsupportedConstruct");
        CHECK(e.origin() == "i.v");
        CHECK(e.line() == 3);
    }
    try {
        rtl::parse_verilog("module m(input a;\nendmodule\n", "s.v");
        FAIL("expected SyntaxError");
    } catch (const ParseError& e) {
        CHECK(e.code() == "SyntaxError");
        CHECK(e.line() == 1);
        CHECK(e.column() == 17);
    }
    CHECK(code_of([] { rtl::parse_verilog("module m(); endmodule\nmodule m(); endmodule\n", "d.v"); }) ==
          "DuplicateModule");
    CHECK(code_of([] { rtl::parse_verilog("module m(input a, output y); assign y = a + a; endmodule", "p.v"); }) !=
          "");
    CHECK(code_of([] { rtl::parse_verilog("module m(input a, output y); assign y = b; endmodule", "u.v"); }) ==
          "UndeclaredIdentifier");
    CHECK(code_of([] {
              rtl::parse_verilog("module m(input c, input d, output y); reg r; always @(posedge c) #1 r <= d; "
                                 "assign y = r; endmodule",
                                 "x.v");
          }) != "");
}

TEST_CASE("parser: printing and reparsing is the identity on corpus and random designs") {
    const std::filesystem::path corpus = std::filesystem::path(CDCV_SOURCE_DIR) / "corpus";
    unsigned n = 0;
    for (const auto& e : std::filesystem::directory_iterator(corpus)) {
        if (!std::filesystem::exists(e.path() / "rtl.v")) continue;
        auto ms = rtl::parse_verilog(read_file(e.path() / "rtl.v"), "c.v");
        for (const auto& m : ms) {
            CAPTURE(e.path().filename().string());
            auto again = rtl::parse_verilog(rtl::to_verilog(m), "r.v");
            REQUIRE(again.size() == 1);
            CHECK(again[0] == m);
            ++n;
        }
    }
    std::mt19937_64 rng(11);
    for (int i = 0; i < 30; ++i) {
        auto d = testing::random_design(rng);
        auto ms = rtl::parse_verilog(d.rtl, "r.v");
        CHECK(rtl::parse_verilog(rtl::to_verilog(ms[0]), "r2.v")[0] == ms[0]);
        ++n;
    }
    CHECK(n > 50);
}

TEST_CASE("parser: mutated input either parses or raises a positioned error") {
    const std::string base = read_file(std::filesystem::path(CDCV_SOURCE_DIR) / "corpus/async_fifo/rtl.v");
    const std::string alphabet = "();,[]{}:?~&|^!<=@ \n01'abqx";
    std::mt19937_64 rng(5);
    unsigned parsed = 0, rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        std::string t = base;
        for (int k = 0, edits = 1 + rng() % 4; k < edits; ++k) {
            std::size_t at = rng() % t.size();
            switch (rng() % 3) {
            case 0: t.erase(at, 1 + rng() % 3); break;
            case 1: t.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
            default: t[at] = alphabet[rng() % alphabet.size()]; break;
            }
        }
        try {
            auto ms = rtl::parse_verilog(t, "f.v");
            try {
                elaborate(ms, infer_top(ms));
            } catch (const Error&) {
            }
            ++parsed;
        } catch (const ParseError& e) {
            CHECK(e.line() >= 1);
            CHECK(e.column() >= 1);
            ++rejected;
        }
    }
    CHECK(parsed > 0);
    CHECK(rejected > 0);
}

// ---- elaboration -------------------------------------------------------------

TEST_CASE("elaborate: one flop") {
    auto nl = elab("module top(input clk, input d, output reg q); always @(posedge clk) q <= d; endmodule");
    CHECK(nl.cells.size() == 1);
    CHECK(nl.find_net("clk"));
    CHECK(nl.find_net("d"));
    CHECK(nl.find_net("q"));
    CHECK(validate(nl).empty());
    // A continuous assign of a register to a port is a buffer.
    nl = elab("module top(input clk, input d, output q); reg r; always @(posedge clk) r <= d; assign q = r; endmodule");
    CHECK(nl.cells.size() == 2);
}

TEST_CASE("elaborate: two sync instances get hierarchical flop names") {
    auto nl = elab(R"(
module S(input clk, input d, output q);
  reg ff1, ff2;
  always @(posedge clk) begin ff1 <= d; ff2 <= ff1; end
  assign q = ff2;
endmodule
module A(input clk, input x, input y, output p, output r);
  S s0 (.clk(clk), .d(x), .q(p));
  S s1 (.clk(clk), .d(y), .q(r));
endmodule)");
    CHECK(count_dffs(nl) == 4);
    for (const char* n : {"s0.ff1", "s0.ff2", "s1.ff1", "s1.ff2"}) CHECK(nl.find_cell(n));
}

TEST_CASE("elaborate: diamond hierarchy matches a recursive instance-count oracle") {
    const char* rtl = R"(
module D(input clk, input d, output q);
  reg a, b, c;
  always @(posedge clk) begin a <= d; b <= a; c <= b; end
  assign q = c;
endmodule
module B(input clk, input d, output q);
  reg r; wire m;
  D u (.clk(clk), .d(d), .q(m));
  always @(posedge clk) r <= m;
  assign q = r;
endmodule
module C(input clk, input d, output q);
  wire m1, m2;
  D u1 (.clk(clk), .d(d), .q(m1));
  D u2 (.clk(clk), .d(m1), .q(m2));
  assign q = m2;
endmodule
module A(input clk, input d, output q);
  wire x, y; reg r;
  B b (.clk(clk), .d(d), .q(x));
  C c (.clk(clk), .d(x), .q(y));
  always @(posedge clk) r <= y;
  assign q = r;
endmodule)";
    auto ms = rtl::parse_verilog(rtl, "dia.v");
    std::map<std::string, const rtl::ParsedModule*> by;
    for (const auto& m : ms) by[m.name] = &m;
    std::function<std::size_t(const std::string&)> flops = [&](const std::string& name) {
        const auto* m = by.at(name);
        std::size_t n = 0;
        for (const auto& b : m->blocks) n += b.assigns.size();
        for (const auto& i : m->instances) n += flops(i.module);
        return n;
    };
    auto nl = elaborate(ms, "A");
    CHECK(count_dffs(nl) == flops("A"));
    CHECK(count_dffs(nl) == 1 + (1 + 3) + 2 * 3);
    CHECK(nl.find_cell("c.u2.b"));
}

TEST_CASE("elaborate: errors") {
    CHECK(code_of([] { elab("module top(input c); X u (.a(c)); endmodule"); }) == "UnresolvedModule");
    CHECK(code_of([] {
              auto ms = rtl::parse_verilog("module a(input c); b u (.c(c)); endmodule\nmodule b(input c); a u (.c(c)); "
                                           "endmodule",
                                           "r.v");
              elaborate(ms, "a");
          }) == "RecursiveInstantiation");
    CHECK(code_of([] {
              elab("module s(input [1:0] d); endmodule\nmodule top(input [2:0] x); s u (.d(x)); endmodule");
          }) == "PortWidthMismatch");
    CHECK(code_of([] { elab("module top(input a, input b, output y); assign y = a; assign y = b; endmodule"); }) !=
          "");
    // Black boxes only on request.
    auto nl = elab("module top(input c, output y); X u (.a(c), .b(y)); endmodule", {.allow_black_boxes = true});
    REQUIRE(nl.instances.size() >= 1);
}

// ---- netlist ---------------------------------------------------------------

TEST_CASE("netlist: validation reports drivers") {
    NetlistBuilder b("t");
    NetId a = b.add_input("a", 1);
    NetId y = b.add_net("y", 1);
    NetId f = b.add_net("floating", 1);
    b.add_gate("g1", GateOp::Buf, {a}, y);
    b.add_gate("g2", GateOp::Not, {a}, y);
    NetId z = b.add_net("z", 1);
    b.add_gate("g3", GateOp::And, {a, f}, z);
    auto errs = validate(b.build_unchecked());
    std::set<std::string> kinds;
    for (const auto& e : errs) kinds.insert(e.kind + ":" + e.subject);
    CHECK(kinds.count("MultipleDrivers:y"));
    CHECK(kinds.count("NoDriver:floating"));
}

TEST_CASE("netlist: fan-in cones") {
    auto nl = elab(R"(
module top(input clk, input d, output y);
  reg ff1, ff2, ff3;
  wire x = ff1 ^ ff2;
  always @(posedge clk) begin ff1 <= d; ff2 <= ~d; ff3 <= x; end
  assign y = ff3;
endmodule)");
    auto q = fanin_cone(nl, nl.net("ff1"), true);
    CHECK(q.sequential == std::set<CellId>{*nl.find_cell("ff1")});
    CHECK(q.comb.empty());
    auto c = fanin_cone(nl, nl.net("x"), true);
    CHECK(c.sequential == std::set<CellId>{*nl.find_cell("ff1"), *nl.find_cell("ff2")});
    CHECK(c.comb.size() == 1);
}

TEST_CASE("netlist: cones equal naive path enumeration on random designs") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 25; ++i) {
        auto d = testing::random_design(rng, 38);
        auto nl = elab(d.rtl);
        for (NetId n = 0; n < nl.nets.size(); ++n) {
            Cone want;
            std::function<void(NetId)> walk = [&](NetId x) {
                const auto& drv = nl.nets[x].driver;
                if (drv.kind == DriverKind::InputPort) want.ports.insert(drv.index);
                if (drv.kind != DriverKind::Cell) return;
                const auto& c = nl.cells[drv.index];
                if (c.is_dff()) want.sequential.insert(drv.index);
                if (c.is_const()) want.consts.insert(drv.index);
                if (!c.is_gate()) return;
                want.comb.insert(drv.index);
                for (NetId in : c.inputs) walk(in);
            };
            walk(n);
            CHECK(fanin_cone(nl, n, true) == want);
        }
    }
}

TEST_CASE("netlist: combinational loop is rejected") {
    NetlistBuilder b("t");
    NetId a = b.add_input("a", 1);
    NetId x = b.add_net("x", 1), y = b.add_net("y", 1);
    b.add_gate("g1", GateOp::And, {a, y}, x);
    b.add_gate("g2", GateOp::Buf, {x}, y);
    auto nl = b.build_unchecked();
    CHECK(code_of([&] { fanin_cone(nl, x, true); }) == "CombinationalLoop");
    CHECK(code_of([&] { comb_order(nl); }) == "CombinationalLoop");
}

// ---- constraints and stimulus ------------------------------------------------

TEST_CASE("constraints: clocks, statics, false paths, errors") {
    auto cs = parse_constraints("clock clk_a -period 10 -domain A\n");
    REQUIRE(cs.clocks.size() == 1);
    CHECK(cs.clocks[0] == ClockSpec{"clk_a", 10, 0, "A"});
    cs = parse_constraints("# quasi-static\nstatic cfg_mode\nfalse_path -from dbg_sig -to snoop_reg\n");
    CHECK(cs.static_signals == std::vector<std::string>{"cfg_mode"});
    REQUIRE(cs.false_paths.size() == 1);
    CHECK(cs.false_paths[0] == FalsePath{"dbg_sig", "snoop_reg"});
    CHECK(code_of([] { parse_constraints("clock c -period 1 -domain A\n"); }) == "BadPeriod");
    CHECK(code_of([] { parse_constraints("clock c -period 4 -domain A\nclock c -period 6 -domain B\n"); }) ==
          "DuplicateClock");
    CHECK(code_of([] { parse_constraints("option frobnicate 3\n"); }) == "UnknownOption");
    try {
        parse_constraints("clock a -period 4 -domain A\nclock\n");
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("constraints: base file supplies options that later text overrides") {
    auto base = parse_constraints("option stability_cycles 3\noption ndff_min_depth 3\n");
    auto cs = parse_constraints("clock c -period 4 -domain A\noption stability_cycles 4\n", "x", &base);
    CHECK(cs.stability_cycles() == 4);
    CHECK(cs.ndff_min_depth() == 3);
    CHECK(cs.clocks.size() == 1);
}

TEST_CASE("stimulus: parse and errors") {
    auto st = parse_stimulus("# setup\nat clk_a 0 set d 0\nat clk_a 3 set d 1\nrandom -ports a,b -p 0.25 -seed 7\n"
                             "run 12 of clk_b\n");
    REQUIRE(st.sets.size() == 2);
    CHECK(st.sets[1].edge == 3);
    REQUIRE(st.random.size() == 1);
    CHECK(st.random[0].ports == std::vector<std::string>{"a", "b"});
    CHECK(st.random[0].p == doctest::Approx(0.25));
    CHECK(st.run_edges == std::make_pair(std::uint64_t{12}, std::string("clk_b")));
    CHECK(code_of([] { parse_stimulus("at c 5 set d 1\nat c 2 set d 0\nrun 3 ticks\n"); }) == "NonMonotonicEdge");
    CHECK(code_of([] { parse_stimulus("at c five set d 1\n"); }) == "SyntaxError");

    auto nl = elab("module top(input c, input d, output q); reg r; always @(posedge c) r <= d; assign q = r; "
                   "endmodule");
    auto cs = parse_constraints("clock c -period 4 -domain A\n");
    CHECK(code_of([&] { check_stimulus(parse_stimulus("at c 1 set nope 1\nrun 3 of c\n"), nl, cs); }) ==
          "UnknownPort");
    CHECK(code_of([&] { check_stimulus(parse_stimulus("at c 1 set d 1\n"), nl, cs); }) == "MissingRunLength");
    CHECK(code_of([&] { check_stimulus(parse_stimulus("at c 1 set d 2\nrun 3 of c\n"), nl, cs); }) ==
          "StimulusOutOfRange");
}
