#include "helpers.hpp"

#include "polyboot/csv_io.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace polyboot;

namespace fs = std::filesystem;

TEST_CASE("fixture shapes") {
    SUBCASE("exact-line") {
        const auto s = make_fixture("exact-line");
        CHECK(s.n_units() == 6);
        CHECK(s.size() == 30);
        const auto y = s.column(s.column_index("lnflow"));
        const auto x = s.column(s.column_index("lncost"));
        CHECK((y - 2.0 * x).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("unit-effects") {
        const auto s = make_fixture("unit-effects");
        CHECK(s.n_units() == 40);
        CHECK(s.size() == 40 * 39);
        CHECK(s.is_full_index_set());
    }
    SUBCASE("triadic") {
        const auto s = make_fixture("triadic");
        CHECK(s.order() == 3);
        CHECK(s.size() == 6 * 5 * 4);
        CHECK(s.is_full_index_set());
    }
    SUBCASE("iv-overidentified") {
        const auto s = make_fixture("iv-overidentified");
        CHECK(s.variable_names() == std::vector<std::string>{"y", "x", "z1", "z2", "z3"});
    }
    SUBCASE("gravity has zero flows") {
        const auto s = make_fixture("gravity");
        const auto f = s.column(0);
        CHECK((f.array() == 0.0).count() > 0);
        CHECK((f.array() >= 0.0).all());
    }
}

TEST_CASE("unknown fixture") {
    CHECK_THROWS_AS(make_fixture("nope"), ParamError);
    CHECK_THROWS_AS(fixture_description("nope"), ParamError);
}

TEST_CASE("regeneration is deterministic") {
    const auto dir = testing::scratch_dir("fixtures");
    for (const auto& name : fixture_names()) {
        const auto a = testing::read_text(write_fixture(name, kDefaultFixtureSeed, dir / "a"));
        const auto b = testing::read_text(write_fixture(name, kDefaultFixtureSeed, dir / "b"));
        CHECK(a == b);
        const auto c = testing::read_text(write_fixture(name, kDefaultFixtureSeed + 1, dir / "c"));
        CHECK(a != c);
    }
}

TEST_CASE("stored fixtures match their generators") {
    const fs::path stored = fs::path(POLYBOOT_SOURCE_DIR) / "fixtures" / "v1";
    const auto dir = testing::scratch_dir("fixtures-regen");
    for (const auto& name : fixture_names()) {
        CAPTURE(name);
        const auto path = stored / (name + ".csv");
        REQUIRE(fs::exists(path));
        const auto fresh = testing::read_text(write_fixture(name, kDefaultFixtureSeed, dir));
        CHECK(fresh == testing::read_text(path));
    }
}

TEST_CASE("fixture round trip through the loader") {
    const auto dir = testing::scratch_dir("fixtures-load");
    const auto s = make_fixture("triadic");
    const auto path = write_fixture("triadic", kDefaultFixtureSeed, dir);
    CsvSchema schema;
    schema.order = 3;
    const auto back = load_csv(path, schema);
    CHECK(back.size() == s.size());
    CHECK((back.column(0) - s.column(0)).cwiseAbs().maxCoeff() == 0.0);
}
