#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include "cdcv/codegen.hpp"
#include "cdcv/corpus.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"

using namespace cdcv;
namespace fs = std::filesystem;

// Set CDCV_UPDATE_GOLDENS=1 to rewrite tests/golden from the current generator.
TEST_CASE("codegen: corpus output matches committed goldens") {
    const fs::path src = CDCV_SOURCE_DIR;
    const fs::path golden = src / "tests" / "golden";
    const bool update = std::getenv("CDCV_UPDATE_GOLDENS") != nullptr;
    unsigned compared = 0;
    for (const auto& name : list_cases(src / "corpus")) {
        CAPTURE(name);
        auto files = generate_all(load_case(src / "corpus", name).analysis);
        std::set<std::string> want;
        for (const auto& f : files) {
            want.insert(f.path);
            fs::path g = golden / name / f.path;
            if (update) write_file_atomic(g, f.text);
            CAPTURE(f.path);
            REQUIRE(fs::exists(g));
            CHECK(read_file(g) == f.text);
            ++compared;
        }
        // No stale goldens left behind.
        if (fs::exists(golden / name))
            for (const auto& e : fs::recursive_directory_iterator(golden / name))
                if (e.is_regular_file()) CHECK(want.count(fs::relative(e.path(), golden / name).generic_string()));
    }
    CHECK(compared > 20);
}
