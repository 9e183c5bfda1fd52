#include <doctest.h>

#include <cstdlib>

#include "cdcv/constraints.hpp"
#include "cdcv/elaborate.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"
#include "sim_props.hpp"

using namespace cdcv;

namespace {

Analysis build(const std::string& rtl, const std::string& sdc) {
    auto mods = rtl::parse_verilog(rtl, "t.v");
    return analyze(elaborate(mods, infer_top(mods)), parse_constraints(sdc));
}

LoadedCase load(const std::string& name) { return load_case(testing::corpus_root(), name); }

const char* kToggle = R"(
module top(input clk_a, input clk_b, output q);
  reg a_q, s1, s2;
  always @(posedge clk_a) a_q <= ~a_q;
  always @(posedge clk_b) begin s1 <= a_q; s2 <= s1; end
  assign q = s2;
endmodule)";

const char* kEqualClocks = "clock clk_a -period 10 -domain A\nclock clk_b -period 10 -domain B\n";

std::int64_t first_change(const SimTrace& t, NetId n, std::uint64_t value) {
    for (const auto& c : t.waves[n])
        if (c.tick >= 0 && c.value == value) return c.tick;
    return -1;
}

} // namespace

TEST_CASE("sim: MSI off matches the reference on every corpus case") {
    for (const auto& name : list_cases(testing::corpus_root())) {
        CAPTURE(name);
        auto c = load(name);
        auto checkers = testing::case_checkers(c);
        MsiConfig off;
        off.enabled = false;
        auto r = simulate(c.analysis, c.stimulus, off, checkers);
        CHECK(r.trace == reference_simulate(c.analysis, c.stimulus, checkers));
        CHECK(r.trace.msi.empty());
        CHECK(r.coverage.total() == 0);
    }
}

TEST_CASE("sim: aligned clocks at probability 1 delay every transition by one edge") {
    auto a = build(kToggle, kEqualClocks);
    auto st = parse_stimulus("run 30 of clk_b\n");
    auto ref = reference_simulate(a, st);
    MsiConfig m;
    m.probability = 1.0;
    auto r = simulate(a, st, m);
    REQUIRE(!r.trace.msi.empty());
    for (const auto& e : r.trace.msi) CHECK(e.kind == MsiKind::Setup);
    NetId s1 = a.netlist.net("s1");
    for (std::int64_t t = 10; t < 300; t += 10) CHECK(r.trace.value_at(s1, t) == ref.value_at(s1, t - 10));
}

TEST_CASE("sim: a fixed seed reproduces the event log") {
    auto a = build(kToggle, kEqualClocks);
    auto st = parse_stimulus("run 50 of clk_b\n");
    MsiConfig m;
    m.seed = 42;
    auto r1 = simulate(a, st, m), r2 = simulate(a, st, m);
    CHECK(!r1.trace.msi.empty());
    CHECK(r1.trace == r2.trace);
    CHECK(r1.coverage == r2.coverage);
    CHECK(r1.decisions == r2.decisions);
    m.seed = 43;
    CHECK(simulate(a, st, m).trace.msi != r1.trace.msi);
}

TEST_CASE("sim: resolved values stay within one edge of the reference") {
    auto a = build(kToggle, "clock clk_a -period 7 -domain A\nclock clk_b -period 10 -domain B\n");
    auto st = parse_stimulus("run 100 of clk_b\n");
    auto ref = reference_simulate(a, st);
    NetId s1 = a.netlist.net("s1");
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        MsiConfig m;
        m.seed = seed;
        auto r = simulate(a, st, m);
        for (std::int64_t t = 10; t <= 1000; t += 10) {
            auto v = r.trace.value_at(s1, t);
            CHECK((v == ref.value_at(s1, t) || v == ref.value_at(s1, t - 10) || v == ref.value_at(s1, t + 10)));
        }
    }
}

TEST_CASE("sim: constant-one flop") {
    auto a = build("module top(input clk, output reg q); always @(posedge clk) q <= 1'b1; endmodule",
                   "clock clk -period 10 -domain A\n");
    auto t = reference_simulate(a, parse_stimulus("run 5 of clk\n"));
    NetId q = a.netlist.net("q");
    // The first edge is at tick 0.
    CHECK(t.value_at(q, -1) == 0);
    for (std::int64_t k = 0; k < 50; ++k) CHECK(t.value_at(q, k) == 1);
    CHECK(t.edges.at("clk") == 5);
}

TEST_CASE("sim: two-flop synchronizer output rises two destination edges after the step") {
    auto a = build(R"(
module top(input clk_a, input clk_b, input d, output q);
  reg a_q, s1, s2;
  always @(posedge clk_a) a_q <= d;
  always @(posedge clk_b) begin s1 <= a_q; s2 <= s1; end
  assign q = s2;
endmodule)", "clock clk_a -period 4 -domain A\nclock clk_b -period 10 -domain B\n");
    auto t = reference_simulate(a, parse_stimulus("at clk_a 2 set d 1\nrun 10 of clk_b\n"));
    // clk_a edges 0,4,8: d rises after tick 4, a_q at 8; the next clk_b edges are 10 and 20.
    CHECK(first_change(t, a.netlist.net("a_q"), 1) == 8);
    CHECK(first_change(t, a.netlist.net("s1"), 1) == 10);
    CHECK(first_change(t, a.netlist.net("q"), 1) == 20);
}

TEST_CASE("checkers: two-cycle pulse fails pulse_width at its second high edge") {
    auto c = load("wide_pulse");
    auto t = reference_simulate(c.analysis, c.stimulus, testing::case_checkers(c));
    const Verdict* v = t.verdict("pulse_width:pulse:s1");
    REQUIRE(v);
    CHECK(!v->pass);
    // pulse is high after edges 2 and 3 (ticks 4, 8); the second high sample is at 12.
    CHECK(v->tick == 12);
    auto clean = load("wide_pulse_clean");
    CHECK(failing(reference_simulate(clean.analysis, clean.stimulus, testing::case_checkers(clean))).empty());
}

TEST_CASE("checkers: binary count 001 to 010 breaks gray_code") {
    auto c = load("binary_counter");
    auto t = reference_simulate(c.analysis, c.stimulus, testing::case_checkers(c));
    const Verdict* v = t.verdict("gray_code:b->s1");
    REQUIRE(v);
    CHECK(!v->pass);
    // Sampled on the source edge after b reaches 2 (period 3).
    CHECK(v->tick == first_change(t, c.analysis.netlist.net("b"), 2) + 3);
    auto g = load("gray_counter");
    CHECK(failing(reference_simulate(g.analysis, g.stimulus, testing::case_checkers(g))).empty());
}

TEST_CASE("checkers: latency window must absorb the metastability delay") {
    auto c = load("msi_latency_clean");
    std::vector<CheckerSpec> tight{parse_checker("latency:a_q->s1:2:2")}, loose{parse_checker("latency:a_q->s1:2:3")};
    MsiConfig m;
    m.probability = 1.0;
    CHECK(!simulate(c.analysis, c.stimulus, m, tight).trace.verdict("latency:a_q->s1:2:2")->pass);
    m.probability = 0.5;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 100; ++s) seeds.push_back(s);
    for (const auto& r : simulate_seeds(c.analysis, c.stimulus, m, loose, seeds))
        CHECK(r.trace.verdict("latency:a_q->s1:2:3")->pass);
}

TEST_CASE("checkers: parse and resolve") {
    CHECK(parse_checker("latency:a->b:2:3") == CheckerSpec{CheckerSpec::Kind::Latency, "a->b", 2, 3});
    CHECK(parse_checker("gray_code:b->s1").name() == "gray_code:b->s1");
    for (const char* bad : {"latency:a->b:3:2", "nope:x", "latency:a->b:2", "stability"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_checker(bad), Error);
    }
    auto c = load("msi_latency_clean");
    CHECK_THROWS_AS(resolve_checker(c.analysis, parse_checker("latency:x->y:2:3")), Error);
}

TEST_CASE("explore: proofs, counterexample and the trivial branch") {
    auto c = load("msi_latency_clean");
    auto checkers = default_checkers(c.analysis);
    checkers.push_back(parse_checker("latency:a_q->s1:2:3"));
    checkers.push_back(parse_checker("latency:a_q->s1:2:2"));
    auto r = explore_exhaustive(c.analysis, c.stimulus, MsiConfig{}, checkers);
    CHECK(r.branches >= 2);
    for (const auto& [name, v] : r.verdicts) {
        CAPTURE(name);
        CHECK(v.proven == (name != "latency:a_q->s1:2:2"));
    }
    const auto& cex = r.verdicts.at("latency:a_q->s1:2:2").counterexample;
    REQUIRE(cex);
    REQUIRE(cex->trace.msi.size() == 1);
    CHECK(cex->trace.msi[0].kind == MsiKind::Setup);

    // No source activity: one branch, same verdicts as the reference.
    auto quiet = parse_stimulus("run 10 of clk_b\n");
    auto q = explore_exhaustive(c.analysis, quiet, MsiConfig{}, checkers);
    CHECK(q.branches == 1);
    auto ref = reference_simulate(c.analysis, quiet, checkers);
    for (const auto& [name, v] : q.verdicts) CHECK(v.proven == ref.verdict(name)->pass);

    MsiConfig tiny;
    tiny.max_decisions = 0;
    try {
        explore_exhaustive(c.analysis, c.stimulus, tiny, checkers);
        FAIL("expected DecisionBudgetExceeded");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "DecisionBudgetExceeded");
    }
    MsiConfig huge;
    huge.mode = MsiConfig::Mode::Exhaustive;
    huge.max_decisions = 25;
    CHECK_THROWS_AS(huge.validate(), Error);
}

TEST_CASE("sim: gray crossings sample only neighbouring codewords") {
    for (const char* name : {"gray_counter", "binary_counter"}) {
        auto c = load(name);
        c.stimulus.run_edges = {300, "clk_b"};
        const std::string src = std::string(name) == "gray_counter" ? "g" : "b";
        unsigned bad = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            MsiConfig m;
            m.seed = seed;
            bad += testing::codeword_violations(c.analysis, simulate(c.analysis, c.stimulus, m).trace, src, "s1", "clk_b");
        }
        CAPTURE(name);
        if (src == "g")
            CHECK(bad == 0);
        else
            CHECK(bad > 0);
    }
}

// ---- coverage ----------------------------------------------------------------

TEST_CASE("coverage: record, replay and report") {
    auto a = build(kToggle, "clock clk_a -period 7 -domain A\nclock clk_b -period 11 -domain B\n");
    auto db = CoverageDb::for_pairs(a.pairs);
    db.record("a_q->s1", 0, MsiKind::Setup, false);
    CHECK(db.count("a_q->s1", 0, Bin::SetupTo0) == 1);
    CHECK(db.total() == 1);
    for (int i = 0; i < 100; ++i) db.record("a_q->s1", 0, MsiKind::Hold, true);
    CHECK(db.count("a_q->s1", 0, Bin::HoldTo1) == 100);
    CHECK_THROWS_AS(db.record("nope", 0, MsiKind::Hold, true), Error);
    CHECK_THROWS_AS(db.record("a_q->s1", 1, MsiKind::Hold, true), Error);

    auto fresh = coverage_report(CoverageDb::for_pairs(a.pairs), a.pairs);
    CHECK(fresh.percent == 0);
    CHECK(fresh.zero_coverage == std::vector<std::string>{"a_q->s1"});

    MsiConfig m;
    m.seed = 42;
    auto r = simulate(a, parse_stimulus("run 300 of clk_b\n"), m);
    auto replay = CoverageDb::for_pairs(a.pairs);
    for (const auto& e : r.trace.msi) replay.record(e.pair, e.bit, e.kind, e.resolved);
    replay.seeds = r.coverage.seeds;
    replay.edges = r.coverage.edges;
    CHECK(replay == r.coverage);
    auto rep = coverage_report(r.coverage, a.pairs);
    CHECK(rep.bins_hit == 4);
    CHECK(rep.percent == 100);
    CHECK(rep.zero_coverage.empty());
}

TEST_CASE("coverage: seed-42 report on the toggle case matches the golden") {
    auto c = load("toggle_coverage");
    MsiConfig m;
    m.seed = 42;
    auto r1 = simulate(c.analysis, c.stimulus, m), r2 = simulate(c.analysis, c.stimulus, m);
    CHECK(r1.coverage == r2.coverage);
    std::string text = coverage_report(r1.coverage, c.analysis.pairs).to_json().dump(2) + "\n";
    auto golden = std::filesystem::path(CDCV_SOURCE_DIR) / "tests/golden/reports/toggle_coverage_seed42.json";
    if (std::getenv("CDCV_UPDATE_GOLDENS")) write_file_atomic(golden, text);
    REQUIRE(std::filesystem::exists(golden));
    CHECK(read_file(golden) == text);
}
