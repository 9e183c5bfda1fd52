#include <doctest.h>

#include "cdcv/constraints.hpp"
#include "cdcv/elaborate.hpp"
#include "cdcv/rules.hpp"
#include "random_design.hpp"

using namespace cdcv;

TEST_CASE("pairs: extraction equals brute-force path enumeration on random designs") {
    std::mt19937_64 rng(2024);
    unsigned multi = 0, crossings = 0;
    for (int i = 0; i < 60; ++i) {
        auto d = testing::random_design(rng);
        CAPTURE(d.rtl);
        CAPTURE(d.constraints);
        auto mods = rtl::parse_verilog(d.rtl, "rand.v");
        auto nl = elaborate(mods, "top");
        CHECK(nl.cells.size() <= 100);
        auto cs = parse_constraints(d.constraints);
        auto a = analyze(std::move(nl), cs);
        auto want = testing::brute_force_pairs(a.netlist, cs);
        CHECK(testing::extracted_pairs(a.pairs) == want);
        multi += d.domains > 1;
        crossings += want.size();
    }
    CHECK(multi >= 25);
    CHECK(crossings > 100);
}
