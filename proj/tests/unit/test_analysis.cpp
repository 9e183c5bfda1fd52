#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>

#include "cdcv/constraints.hpp"
#include "cdcv/elaborate.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"
#include "cdcv/rules.hpp"
#include "random_design.hpp"

using namespace cdcv;

namespace {

const char* kAB = "clock clk_a -period 4 -domain A\nclock clk_b -period 10 -domain B\n";

Analysis build(const std::string& rtl, const std::string& sdc = kAB) {
    auto mods = rtl::parse_verilog(rtl, "t.v");
    return analyze(elaborate(mods, infer_top(mods)), parse_constraints(sdc));
}

std::set<std::string> rules_of(const Analysis& a) {
    std::set<std::string> out;
    for (const auto& f : run_rules(a)) out.insert(f.rule);
    return out;
}

std::multiset<SyncKind> kinds_of(const Analysis& a) {
    std::multiset<SyncKind> out;
    for (const auto& s : a.syncs.syncs) out.insert(s.kind);
    return out;
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

const char* kTwoFlop = R"(
module top(input clk_a, input clk_b, input d, output q);
  reg a_q, s1, s2;
  always @(posedge clk_a) a_q <= d;
  always @(posedge clk_b) begin s1 <= a_q; s2 <= s1; end
  assign q = s2;
endmodule)";

} // namespace

// ---- domains -----------------------------------------------------------------

TEST_CASE("domains: flop takes the domain of its declared clock") {
    auto a = build("module top(input clk_a, input d, output reg q); always @(posedge clk_a) q <= d; endmodule",
                   "clock clk_a -period 10 -domain A\n");
    CHECK(a.domains.domain_of(*a.netlist.find_cell("q")) == "A");
}

TEST_CASE("domains: gated clock keeps the root domain and is noted") {
    auto a = build(R"(
module top(input clk_a, input e, input d, output q);
  reg en, g;
  wire gclk = clk_a & en;
  always @(posedge clk_a) en <= e;
  always @(posedge gclk) g <= d;
  assign q = g;
endmodule)", "clock clk_a -period 10 -domain A\n");
    CellId g = *a.netlist.find_cell("g");
    CHECK(a.domains.domain_of(g) == "A");
    REQUIRE(a.domains.gated.size() == 1);
    CHECK(a.domains.gated[0].flop == g);
    CHECK(a.domains.gated[0].root_clock == "clk_a");
}

TEST_CASE("domains: undeclared clock and data on clock pin") {
    CHECK(code_of([] {
              build("module top(input c, input d, output reg q); always @(posedge c) q <= d; endmodule",
                    "clock clk_a -period 4 -domain A\n");
          }) == "UndeclaredClock");
    const char* rtl = R"(
module top(input clk_a, input d, output q);
  reg r, g;
  wire gc = clk_a & r;
  always @(posedge clk_a) r <= d;
  always @(posedge gc) g <= d;
  assign q = g;
endmodule)";
    auto a = build(rtl, "clock clk_a -period 4 -domain A\n");
    REQUIRE(a.domains.notes.size() == 1);
    CHECK(a.domains.notes[0].kind == "DataOnClockPin");
    CHECK(code_of([&] { build(rtl, "clock clk_a -period 4 -domain A\noption data_on_clock error\n"); }) ==
          "DataOnClockPin");
}

TEST_CASE("domains: random designs match clock-port labeling") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 25; ++i) {
        auto d = testing::random_design(rng);
        auto a = build(d.rtl, d.constraints);
        for (CellId c = 0; c < a.netlist.cells.size(); ++c) {
            if (!a.netlist.cells[c].is_dff()) continue;
            const std::string& clk = a.netlist.nets[a.netlist.cells[c].dff.clock].name;
            CHECK(a.domains.domain_of(c) == "D" + clk.substr(3));
        }
    }
}

// ---- pairs -------------------------------------------------------------------

TEST_CASE("pairs: direct crossing, same domain, suppression") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg ff_a, ff_b;
  always @(posedge clk_a) ff_a <= d;
  always @(posedge clk_b) ff_b <= ff_a;
  assign q = ff_b;
endmodule)");
    REQUIRE(a.pairs.size() == 1);
    CHECK(a.pairs[0].id == "ff_a->ff_b");
    CHECK(a.pairs[0].path.empty());
    CHECK(!a.pairs[0].suppressed);

    a = build(R"(
module top(input clk_a, input d, output q);
  reg f1, f2;
  always @(posedge clk_a) begin f1 <= d; f2 <= f1; end
  assign q = f2;
endmodule)", "clock clk_a -period 4 -domain A\n");
    CHECK(a.pairs.empty());

    const char* three = R"(
module top(input clk_a, input clk_b, input clk_c, input d, output q, output r);
  reg a1, a2, b1, c1, dbg_sig, snoop_reg;
  wire x = a1 ^ a2;
  wire y = ~x;
  always @(posedge clk_a) begin a1 <= d; a2 <= ~d; dbg_sig <= d; end
  always @(posedge clk_b) b1 <= y;
  always @(posedge clk_c) begin c1 <= b1; snoop_reg <= dbg_sig; end
  assign q = c1;
  assign r = snoop_reg;
endmodule)";
    std::string sdc = std::string(kAB) + "clock clk_c -period 7 -domain C\nfalse_path -from dbg_sig -to snoop_reg\n";
    a = build(three, sdc);
    auto cs = parse_constraints(sdc);
    CHECK(testing::extracted_pairs(a.pairs) == testing::brute_force_pairs(a.netlist, cs));
    const CdcPair* through = nullptr;
    const CdcPair* fp = nullptr;
    for (const auto& p : a.pairs) {
        if (p.id == "a1->b1") through = &p;
        if (p.id == "dbg_sig->snoop_reg") fp = &p;
    }
    REQUIRE(through);
    CHECK(through->path.size() == 2);
    REQUIRE(fp);
    CHECK(fp->suppressed == std::optional<std::string>("false_path"));
}

TEST_CASE("pairs: enable pins are crossings too") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg en_a, b;
  always @(posedge clk_a) en_a <= d;
  always @(posedge clk_b) if (en_a) b <= d;
  assign q = b;
endmodule)");
    REQUIRE(a.pairs.size() == 1);
    CHECK(a.pairs[0].pin == PinKind::Enable);
    CHECK(a.pairs[0].id == "en_a->b:en");
}

TEST_CASE("rdc: reset driven from another domain") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg ra, b;
  always @(posedge clk_a) ra <= d;
  always @(posedge clk_b or negedge ra) if (!ra) b <= 1'b0; else b <= d;
  assign q = b;
endmodule)");
    REQUIRE(a.rdc.size() == 1);
    CHECK(a.rdc[0].src_name == "ra");
    CHECK(a.rdc[0].dst_name == "b");

    a = build(R"(
module top(input clk_b, input rst_n, input d, output q);
  reg b;
  always @(posedge clk_b or negedge rst_n) if (!rst_n) b <= 1'b0; else b <= d;
  assign q = b;
endmodule)", "clock clk_b -period 10 -domain B\nreset rst_n -domain B -active_low\n");
    CHECK(a.rdc.empty());
}

TEST_CASE("rdc: reset tree across two domains matches enumeration") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input rst_n, input d, output [4:0] q);
  reg x0, x1, x2, y0, y1;
  wire r = rst_n;
  always @(posedge clk_a or negedge r) if (!r) x0 <= 1'b0; else x0 <= d;
  always @(posedge clk_a or negedge r) if (!r) x1 <= 1'b0; else x1 <= x0;
  always @(posedge clk_b or negedge r) if (!r) x2 <= 1'b0; else x2 <= d;
  always @(posedge clk_b or negedge r) if (!r) y0 <= 1'b0; else y0 <= x2;
  always @(posedge clk_b or negedge r) if (!r) y1 <= 1'b0; else y1 <= y0;
  assign q = {x0, x1, x2, y0, y1};
endmodule)", std::string(kAB) + "reset rst_n -domain A -active_low\n");
    std::set<std::string> got;
    for (const auto& p : a.rdc) got.insert(p.src_name + ">" + p.dst_name);
    CHECK(got == std::set<std::string>{"rst_n>x2", "rst_n>y0", "rst_n>y1"});
}

// ---- synchronizers ------------------------------------------------------------

TEST_CASE("sync: textbook two-flop chain") {
    auto a = build(kTwoFlop);
    REQUIRE(a.syncs.syncs.size() == 1);
    CHECK(a.syncs.syncs[0].kind == SyncKind::Ndff);
    CHECK(a.syncs.syncs[0].depth() == 2);
    CHECK(a.syncs.classes.at("a_q->s1").status == PairStatus::Synchronized);
    CHECK(a.syncs.classes.at("a_q->s1").kind == SyncKind::Ndff);
    CHECK(rules_of(a).empty());
}

TEST_CASE("sync: first stage tapped by other logic is not a synchronizer") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q, output t);
  reg a_q, s1, s2, o;
  always @(posedge clk_a) a_q <= d;
  always @(posedge clk_b) begin s1 <= a_q; s2 <= s1; o <= s1 & d; end
  assign q = s2;
  assign t = o;
endmodule)");
    CHECK(a.syncs.syncs.empty());
    CHECK(a.syncs.classes.at("a_q->s1").status == PairStatus::Unsynchronized);
    CHECK(rules_of(a).count("MISSING_SYNC"));
}

TEST_CASE("sync: plain flop and logic on path are unsynchronized") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg a_q, b_q;
  always @(posedge clk_a) a_q <= d;
  always @(posedge clk_b) b_q <= a_q;
  assign q = b_q;
endmodule)");
    CHECK(a.syncs.classes.at("a_q->b_q").status == PairStatus::Unsynchronized);
    auto fs = run_rules(a);
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].rule == "MISSING_SYNC");
    CHECK(fs[0].severity == Severity::Error);

    a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg a_q, a_r, s1, s2;
  always @(posedge clk_a) begin a_q <= d; a_r <= ~d; end
  always @(posedge clk_b) begin s1 <= a_q ^ a_r; s2 <= s1; end
  assign q = s2;
endmodule)");
    for (const auto& p : a.pairs) CHECK(a.syncs.classes.at(p.id).status == PairStatus::Unsynchronized);
    fs = run_rules(a);
    bool comb = false;
    for (const auto& f : fs)
        if (f.rule == "COMB_ON_CDC") {
            comb = true;
            bool has_xor = false;
            for (const auto& w : f.witness) has_xor |= w.find("xor") != std::string::npos;
            CHECK_MESSAGE(has_xor, "witness should name the XOR gate");
        }
    CHECK(comb);
}

TEST_CASE("sync: pulse synchronizer, async FIFO and one raw crossing") {
    std::string fifo = read_file(std::filesystem::path(CDCV_SOURCE_DIR) / "corpus/async_fifo/rtl.v");
    fifo.replace(fifo.find("module top("), 11, "module fifo(");
    fifo += R"(
module top(input clk_a, input clk_b, input rst_a_n, input rst_b_n, input wr, input rd, input [3:0] wd,
           input pulse, input raw, output [3:0] rdq, output p_out, output raw_q);
  wire f, e;
  fifo u_f (.wclk(clk_a), .rclk(clk_b), .wrst_n(rst_a_n), .rrst_n(rst_b_n), .wr_en(wr), .rd_en(rd),
            .wdata(wd), .rdata(rdq), .full(f), .empty(e));
  reg t, p1, p2, p3, r_a, r_b;
  always @(posedge clk_a) begin t <= t ^ pulse; r_a <= raw; end
  always @(posedge clk_b) begin p1 <= t; p2 <= p1; p3 <= p2; r_b <= r_a; end
  assign p_out = p2 ^ p3;
  assign raw_q = r_b;
endmodule)";
    auto a = build(fifo, std::string(kAB) + "reset rst_a_n -domain A -active_low\nreset rst_b_n -domain B -active_low\n");
    CHECK(kinds_of(a) == std::multiset<SyncKind>{SyncKind::PulseToggle, SyncKind::AsyncFifo});
    std::vector<std::string> unsynced;
    for (const auto& [id, c] : a.syncs.classes)
        if (c.status == PairStatus::Unsynchronized) unsynced.push_back(id);
    CHECK(unsynced == std::vector<std::string>{"r_a->r_b"});
}

// ---- rules -------------------------------------------------------------------

TEST_CASE("rules: convergence names both synchronizers") {
    auto a = build(read_file(std::filesystem::path(CDCV_SOURCE_DIR) / "corpus/convergence/rtl.v"));
    auto fs = run_rules(a);
    REQUIRE(fs.size() == 1);
    CHECK(fs[0].rule == "CONVERGENCE");
    CHECK(fs[0].severity == Severity::Warning);
    CHECK(fs[0].syncs == std::vector<std::string>{"ndff:x1", "ndff:y1"});
}

TEST_CASE("rules: constant source crossing without a static declaration") {
    const char* rtl = R"(
module top(input clk_a, input clk_b, input rst_n, output q);
  reg mode, b;
  always @(posedge clk_a or negedge rst_n) if (!rst_n) mode <= 1'b0; else mode <= mode;
  always @(posedge clk_b) b <= mode;
  assign q = b;
endmodule)";
    auto sdc = std::string(kAB) + "reset rst_n -domain A -active_low\n";
    CHECK(rules_of(build(rtl, sdc)).count("STATIC_NOT_CONSTRAINED"));
    auto a = build(rtl, sdc + "static mode\n");
    CHECK(rules_of(a).empty());
    REQUIRE(a.pairs.size() == 1);
    CHECK(a.pairs[0].suppressed == std::optional<std::string>("static"));
}

TEST_CASE("rules: severity override and ordering") {
    const char* rtl = R"(
module top(input clk_a, input clk_b, input d, output q, output r);
  reg a1, a2, b1, b2;
  always @(posedge clk_a) begin a1 <= d; a2 <= ~d; end
  always @(posedge clk_b) begin b2 <= a2; b1 <= a1; end
  assign q = b1;
  assign r = b2;
endmodule)";
    auto fs = run_rules(build(rtl));
    REQUIRE(fs.size() == 2);
    CHECK(fs[0].subject < fs[1].subject);
    fs = run_rules(build(rtl, std::string(kAB) + "option severity.MISSING_SYNC Info\n"));
    for (const auto& f : fs) CHECK(f.severity == Severity::Info);
    for (const auto& r : rule_catalog()) CHECK(!r.empty());
    CHECK(rule_catalog().size() == 10);
}
