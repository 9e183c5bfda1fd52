#include <doctest.h>

#include "cdcv/error.hpp"
#include "coverage_algebra.hpp"

using namespace cdcv;

TEST_CASE("coverage: merge algebra holds over 1000 random trials") {
    auto r = testing::coverage_algebra_trials(1000, 7);
    CHECK(r.trials == 1000);
    CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

TEST_CASE("coverage: merging databases of different pair sets is rejected") {
    std::mt19937_64 rng(1);
    auto a = CoverageDb::for_pairs(testing::random_pairs(rng));
    std::vector<CdcPair> other(1);
    other[0].id = "x->y";
    other[0].width = 5;
    auto b = CoverageDb::for_pairs(other);
    CHECK_THROWS_AS(merge(a, b), Error);
}

TEST_CASE("coverage: differing scopes meet at empty, explicit scope wins") {
    std::mt19937_64 rng(3);
    auto ps = testing::random_pairs(rng);
    auto a = CoverageDb::for_pairs(ps, "x"), b = CoverageDb::for_pairs(ps, "y");
    CHECK(merge(a, b).scope.empty());
    CHECK(merge(a, a).scope == "x");
    CHECK(merge(a, b, std::string("z")).scope == "z");
}
