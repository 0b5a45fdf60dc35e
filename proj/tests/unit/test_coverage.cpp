#include "helpers.hpp"

#include "polyboot/coverage.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/estimators.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace polyboot;

namespace {

EstimatorSpec mean_x() {
    EstimatorSpec spec;
    spec.variant = MeanSpec{"x"};
    return spec;
}

std::size_t count_of(const PolyadicSample& s, const std::string& a, const std::string& b) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto t = s.tuple(i);
        auto base = [&](UnitId u) {
            const auto& l = s.unit_labels()[u];
            return l.substr(0, l.find('#'));
        };
        c += base(t[0]) == a && base(t[1]) == b ? 1 : 0;
    }
    return c;
}

}  // namespace

TEST_CASE("synthetic DGPs") {
    SUBCASE("constant link") {
        const auto s = generate_synthetic(constant_dgp(6, 2.5), 1, 0);
        CHECK(s.size() == 30);
        CHECK(s.is_full_index_set());
        CHECK((s.column(0).array() == 2.5).all());
    }
    SUBCASE("sender effect without noise") {
        const auto s = generate_synthetic(sender_dgp(5, 0.0), 3, 0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t j = 0; j < s.size(); ++j) {
                if (s.tuple(i)[0] == s.tuple(j)[0]) {
                    CHECK(s.value(i, 0) == s.value(j, 0));
                }
            }
        }
    }
    SUBCASE("reproducible by (seed, r)") {
        const auto a = generate_synthetic(unit_effects_dgp(7, 1.0, 0.3), 5, 2);
        const auto b = generate_synthetic(unit_effects_dgp(7, 1.0, 0.3), 5, 2);
        const auto c = generate_synthetic(unit_effects_dgp(7, 1.0, 0.3), 5, 3);
        CHECK(a.column(0) == b.column(0));
        CHECK(a.column(0) != c.column(0));
        CHECK(a.unit_labels().front() == "u0");
    }
    SUBCASE("regression columns") {
        const auto s = generate_synthetic(regression_dgp(6, 0.5, 2.0, 1.0, 0.1), 2, 0);
        CHECK(s.variable_names() == std::vector<std::string>{"y", "x"});
    }
}

TEST_CASE("unit-effects mean has the two-way exchangeable variance") {
    const std::size_t n = 20;
    const double sc = 1.0;
    const double se = 0.3;
    const int R = 2000;
    double sum = 0.0;
    double sq = 0.0;
    for (int r = 0; r < R; ++r) {
        const double m = generate_synthetic(unit_effects_dgp(n, sc, se), 101, r).column(0).mean();
        sum += m;
        sq += m * m;
    }
    const double mean = sum / R;
    const double emp = (sq - R * mean * mean) / (R - 1);
    // mean = (2/n) sum C_k + noise average.
    const double expected = 4.0 * sc * sc / n + se * se / (n * (n - 1.0));
    CHECK(std::abs(std::sqrt(emp / expected) - 1.0) < 0.05);
}

TEST_CASE("pigeonhole replication") {
    const auto s = PolyadicSample::build(2, {"A", "B", "C"}, {"x"},
                                         {{{0, 1}, {1.0}, 0},
                                          {{1, 0}, {2.0}, 0},
                                          {{0, 2}, {3.0}, 0},
                                          {{2, 0}, {4.0}, 0},
                                          {{1, 2}, {5.0}, 0},
                                          {{2, 1}, {6.0}, 0}});
    SUBCASE("identity counts") {
        const auto two = PolyadicSample::build(2, {"A", "B"}, {"x"}, {{{0, 1}, {1.0}, 0}, {{1, 0}, {2.0}, 0}});
        const auto r = pigeonhole_replicate(two, {1.0, 1.0});
        CHECK(r.size() == 2);
        CHECK(r.unit_labels() == two.unit_labels());
        CHECK(r.column(0) == two.column(0));
    }
    SUBCASE("counts (2,0) on n=2 are degenerate") {
        const auto two = PolyadicSample::build(2, {"A", "B"}, {"x"}, {{{0, 1}, {1.0}, 0}, {{1, 0}, {2.0}, 0}});
        CHECK_THROWS_AS(pigeonhole_replicate(two, {2.0, 0.0}), DegenerateDraw);
    }
    SUBCASE("counts (2,1,0)") {
        const auto r = pigeonhole_replicate(s, {2.0, 1.0, 0.0});
        CHECK(count_of(r, "A", "B") == 2);
        CHECK(count_of(r, "B", "A") == 2);
        CHECK(count_of(r, "A", "C") == 0);
        CHECK(count_of(r, "C", "A") == 0);
        CHECK(count_of(r, "B", "C") == 0);
        CHECK(r.n_units() == 3);
        std::set<std::string> labels(r.unit_labels().begin(), r.unit_labels().end());
        CHECK(labels.count("A#2") == 1);
    }
    SUBCASE("resampler is reproducible") {
        const auto big = testing::random_dyads(6, 3);
        const auto a = pigeonhole_dgp_resample(big, 4, 1);
        const auto b = pigeonhole_dgp_resample(big, 4, 1);
        CHECK(a.column(0) == b.column(0));
        CHECK(a.unit_labels() == b.unit_labels());
    }
}

TEST_CASE("pigeonhole DGP recovers the source estimate on average") {
    const auto s = testing::random_dyads(8, 6);
    const double truth = s.column(1).mean();
    const int R = 2000;
    double sum = 0.0;
    double sq = 0.0;
    for (int r = 0; r < R; ++r) {
        const auto rs = pigeonhole_dgp_resample(s, 9, static_cast<std::uint64_t>(r));
        const double m = rs.column(rs.column_index("x")).mean();
        sum += m;
        sq += m * m;
    }
    const double mean = sum / R;
    const double sd = std::sqrt((sq - R * mean * mean) / (R - 1));
    // Ratio estimator: allow for its small bias on top of Monte Carlo error.
    CHECK(std::abs(mean - truth) < 3.0 * sd / std::sqrt(double(R)) + 0.01 * std::abs(truth) + 0.01);
}

TEST_CASE("cover test slack") {
    CHECK(interval_covers(1.0, 2.0, 1.5));
    CHECK(interval_covers(1.0, 1.0, 1.0));
    CHECK(interval_covers(1.0, 1.0, 1.0 + 1e-12));
    CHECK_FALSE(interval_covers(1.0, 2.0, 2.1));
}

TEST_CASE("exact-fit data gives full coverage") {
    CoverageConfig c;
    c.dgp = constant_dgp(6, 1.25);
    c.spec = mean_x();
    c.methods = {CoverageMethod::bayes, CoverageMethod::pigeonhole, CoverageMethod::naive, CoverageMethod::graham};
    c.replications = 5;
    c.draws = 20;
    c.seed = 3;
    c.threads = 1;
    const auto rep = run_coverage(c);
    CHECK(rep.truth[0] == doctest::Approx(1.25));
    for (const auto& m : rep.methods) {
        CHECK(m.evaluated == 5);
        CHECK(m.coverage[0] == 1.0);
    }
}

TEST_CASE("one replication") {
    CoverageConfig c;
    c.dgp = unit_effects_dgp(8, 1.0, 0.3);
    c.spec = mean_x();
    c.methods = {CoverageMethod::bayes};
    c.replications = 1;
    c.draws = 30;
    c.seed = 1;
    const auto rep = run_coverage(c);
    CHECK(rep.replications == 1);
    const double cov = rep.methods[0].coverage[0];
    CHECK((cov == 0.0 || cov == 1.0));
}

TEST_CASE("coverage is reproducible and thread-invariant") {
    CoverageConfig c;
    c.dgp = unit_effects_dgp(10, 1.0, 0.3);
    c.spec = mean_x();
    c.methods = {CoverageMethod::bayes, CoverageMethod::pigeonhole, CoverageMethod::naive};
    c.replications = 12;
    c.draws = 40;
    c.seed = 8;
    c.threads = 1;
    const auto a = run_coverage(c);
    c.threads = 3;
    const auto b = run_coverage(c);
    REQUIRE(a.methods.size() == b.methods.size());
    for (std::size_t k = 0; k < a.methods.size(); ++k) {
        CHECK(a.methods[k].coverage == b.methods[k].coverage);
        CHECK(a.methods[k].mean_width == b.methods[k].mean_width);
        CHECK(a.methods[k].coverage[0] >= 0.0);
        CHECK(a.methods[k].coverage[0] <= 1.0);
    }
    CHECK(a.mean_estimate == b.mean_estimate);
}

TEST_CASE("graham is skipped on pigeonhole-DGP data") {
    const auto s = testing::random_dyads(8, 2);
    CoverageConfig c;
    c.source = CoverageConfig::Source::pigeonhole_of;
    c.sample = &s;
    c.spec = mean_x();
    c.methods = {CoverageMethod::graham, CoverageMethod::naive};
    c.replications = 4;
    c.draws = 10;
    c.seed = 2;
    const auto rep = run_coverage(c);
    CHECK(rep.truth[0] == doctest::Approx(s.column(1).mean()));
    CHECK(rep.methods[0].skipped + rep.methods[0].evaluated + rep.methods[0].failures == 4);
    CHECK(rep.methods[0].skipped > 0);
    CHECK(rep.methods[0].skip_reason.find("missing dyads") != std::string::npos);
    CHECK(rep.methods[1].evaluated == 4);
}

TEST_CASE("method parsing") {
    CHECK(parse_method("graham") == CoverageMethod::graham);
    CHECK(method_name(CoverageMethod::naive) == "naive");
    CHECK_THROWS_AS(parse_method("wild"), ConfigError);
}
