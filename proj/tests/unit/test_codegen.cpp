#include <doctest.h>

#include "cdcv/codegen.hpp"
#include "cdcv/constraints.hpp"
#include "cdcv/elaborate.hpp"

using namespace cdcv;

namespace {

Analysis build(const char* rtl, const std::string& sdc) {
    auto mods = rtl::parse_verilog(rtl, "t.v");
    auto nl = elaborate(mods, infer_top(mods));
    return analyze(std::move(nl), parse_constraints(sdc));
}

const char* kTwoFlop = R"(
module top(input clk_a, input clk_b, input d, output q);
  reg a_q; reg s1; reg s2;
  always @(posedge clk_a) a_q <= d;
  always @(posedge clk_b) begin s1 <= a_q; s2 <= s1; end
  assign q = s2;
endmodule
)";

const char* kClocks = "clock clk_a -period 4 -domain A\nclock clk_b -period 10 -domain B\n";

const GeneratedFile* by_path(const std::vector<GeneratedFile>& fs, const std::string& p) {
    for (const auto& f : fs)
        if (f.path == p) return &f;
    return nullptr;
}

bool contains(const std::string& s, const std::string& sub) { return s.find(sub) != std::string::npos; }

} // namespace

TEST_CASE("codegen: two-flop synchronizer yields one ndff checker, coverage and bind") {
    auto a = build(kTwoFlop, kClocks);
    auto fs = generate_all(a);
    REQUIRE(fs.size() == 3);
    const auto* nd = by_path(fs, "gen/checks/ndff_sync_check/ndff_s1.sv");
    REQUIRE(nd);
    CHECK(nd->generator == "ndff_sync_check");
    CHECK(nd->text.rfind("// generated-by cdcv " CDCV_VERSION "\n", 0) == 0);
    CHECK(contains(nd->text, "module ndff_s1_checker"));
    // Two dst edges of period 10 span five source samples of period 4.
    CHECK(contains(nd->text, "$stable($past(a_q, 4))"));
    CHECK(!contains(nd->text, "$past(a_q, 5)"));
    CHECK(contains(nd->text, "@(posedge clk_a)"));

    const auto* cov = by_path(fs, "gen/coverage/cdc_cov.sv");
    REQUIRE(cov);
    CHECK(contains(cov->text, "covergroup cg_a_q__s1 @(posedge clk_b)"));
    for (const char* b : {"setup_to_0", "setup_to_1", "hold_to_0", "hold_to_1"})
        CHECK(contains(cov->text, std::string("bins ") + b + " "));

    const auto* bind = by_path(fs, "gen/bind_all.sv");
    REQUIRE(bind);
    CHECK(contains(bind->text, "bind top ndff_s1_checker u_ndff_s1_checker"));
    CHECK(contains(bind->text, ".a_q(a_q)"));

    auto issues = lint_generated(fs, a.netlist);
    for (const auto& i : issues) MESSAGE(i.file << ":" << i.line << ": " << i.message);
    CHECK(issues.empty());
    CHECK(generate_all(a).size() == fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) CHECK(generate_all(a)[i].text == fs[i].text);
}

TEST_CASE("codegen: declared static signal gets a signal_config_check assertion") {
    const char* rtl = R"(
module top(input clk_a, input clk_b, input rst_n, input [1:0] mode_in, output [1:0] q);
  reg [1:0] cfg_mode; reg [1:0] r;
  always @(posedge clk_a or negedge rst_n) if (!rst_n) cfg_mode <= 2'b0; else cfg_mode <= mode_in;
  always @(posedge clk_b) r <= cfg_mode;
  assign q = r;
endmodule
)";
    auto a = build(rtl, std::string(kClocks) + "reset rst_n -domain A -active_low\nstatic cfg_mode\n");
    auto fs = generate_all(a);
    const auto* sc = by_path(fs, "gen/checks/signal_config_check/signal_config.sv");
    REQUIRE(sc);
    CHECK(sc->generator == "signal_config_check");
    CHECK(contains(sc->text, "disable iff (!rst_n) $stable(cfg_mode)"));
    // The static crossing is suppressed, so no covergroup.
    CHECK(!by_path(fs, "gen/coverage/cdc_cov.sv"));
    CHECK(lint_generated(fs, a.netlist).empty());
}

TEST_CASE("codegen: single-domain design generates nothing") {
    const char* rtl = R"(
module top(input clk, input d, output q);
  reg r; always @(posedge clk) r <= d; assign q = r;
endmodule
)";
    auto a = build(rtl, "clock clk -period 10 -domain A\n");
    CHECK(generate_all(a).empty());
}

TEST_CASE("codegen: lint reports broken text") {
    auto a = build(kTwoFlop, kClocks);
    auto fs = generate_all(a);
    auto broken = fs;
    auto& t = broken[0].text;
    t.erase(t.find("endproperty"), 11);
    CHECK(!lint_generated(broken, a.netlist).empty());

    broken = fs;
    broken.back().text += "\nbind top ndff_s1_checker u_x (\n    .a_q(no_such_net)\n);\n";
    auto issues = lint_generated(broken, a.netlist);
    REQUIRE(!issues.empty());
    CHECK(contains(issues[0].message, "no_such_net"));

    broken = fs;
    broken[0].text.replace(broken[0].text.find("!$stable(a_q)"), 13, "!$stable(zz)");
    CHECK(!lint_generated(broken, a.netlist).empty());
}

TEST_CASE("codegen: interpreter agrees with runtime checkers") {
    auto a = build(kTwoFlop, kClocks);
    auto fs = generate_all(a);
    auto checkers = default_checkers(a);
    REQUIRE(checkers.size() == 1);
    int fails = 0, passes = 0;
    for (double p : {0.02, 0.05, 0.1, 0.3, 0.6}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            auto st = parse_stimulus("random -ports d -p " + std::to_string(p) + " -seed " + std::to_string(seed) +
                                     " -clock clk_a\nrun 60 of clk_b\n");
            auto tr = reference_simulate(a, st, checkers);
            auto sv = interpret_assertions(fs, a, tr);
            for (const auto& c : checkers) {
                const Verdict* v = tr.verdict(c.name());
                REQUIRE(v);
                for (const auto& pn : property_names(c)) {
                    REQUIRE(sv.count(pn));
                    CHECK(sv[pn].pass == v->pass);
                    CHECK(sv[pn].tick == v->tick);
                }
                (v->pass ? passes : fails)++;
            }
        }
    }
    CHECK(fails > 0);
    CHECK(passes > 0);
}

TEST_CASE("codegen: identifiers") {
    CHECK(sv_ident("ndff:u1.s1") == "ndff_u1_s1");
    CHECK(sv_ident("a_q->s1") == "a_q__s1");
    CHECK(sv_ident("1x") == "_1x");
    CHECK(property_names({CheckerSpec::Kind::Fifo, "fifo:wp"}) ==
          std::vector<std::string>{"p_fifo_fifo_wp_full", "p_fifo_fifo_wp_empty"});
}
