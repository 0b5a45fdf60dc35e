#include "helpers.hpp"
#include "oracles.hpp"

#include "polyboot/errors.hpp"
#include "polyboot/estimator_spec.hpp"
#include "polyboot/estimators.hpp"
#include "polyboot/moments.hpp"
#include "polyboot/weights.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace polyboot;

namespace {

ObservationWeights random_weights(const PolyadicSample& s, std::uint64_t b) {
    return product_weights(draw_exponential_units(s.n_units(), 99, b), s);
}

PolyadicSample poisson_dyads(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> e(n);
    for (auto& v : e) {
        v = 0.3 * nd(gen);
    }
    return testing::dyads(
        n,
        [&](UnitId i, UnitId j) {
            const double x1 = nd(gen);
            const double x2 = nd(gen) > 0.0 ? 1.0 : 0.0;
            std::poisson_distribution<int> pd(std::exp(0.5 + 0.4 * x1 - 0.3 * x2 + e[i] + e[j]));
            return std::vector<double>{double(pd(gen)), x1, x2};
        },
        {"y", "x1", "x2"});
}

}  // namespace

TEST_CASE("weighted mean") {
    const auto s = PolyadicSample::build(2, {"A", "B", "C"}, {"x"},
                                         {{{0, 1}, {1.0}, 0}, {{1, 0}, {2.0}, 0}, {{0, 2}, {3.0}, 0}, {{2, 0}, {4.0}, 0}});
    CHECK(weighted_mean(s, uniform_weights(s), "x") == doctest::Approx(2.5));
    ObservationWeights one{Vector::Unit(4, 2), ObservationWeights::Scheme::custom};
    CHECK(weighted_mean(s, one, "x") == 3.0);

    // n=3 full set with V=(1,2,3); values are the numerator ranks 1..6 by row order.
    const auto full = testing::dyads(3, [](UnitId, UnitId) { return std::vector<double>{0.0}; }, {"x"});
    std::vector<Observation> obs;
    double expected = 0.0;
    const double v[] = {1.0, 2.0, 3.0};
    for (std::size_t i = 0; i < full.size(); ++i) {
        const auto t = full.tuple(i);
        obs.push_back({{t[0], t[1]}, {double(i + 1)}, 0});
        expected += double(i + 1) * v[t[0]] * v[t[1]] / 22.0;
    }
    const auto ranked = PolyadicSample::build(2, full.unit_labels(), {"x"}, obs);
    UnitDraw d;
    d.values = {1.0, 2.0, 3.0};
    CHECK(weighted_mean(ranked, product_weights(d, ranked), "x") == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("weighted OLS") {
    SUBCASE("exact line is weight-invariant") {
        const auto s = testing::dyads(5, [](UnitId i, UnitId j) {
            const double x = 0.5 + i + 0.25 * j;
            return std::vector<double>{2.0 * x, x};
        }, {"y", "x"});
        for (std::uint64_t b = 0; b < 10; ++b) {
            CHECK(weighted_ols(s, random_weights(s, b), "y", {"x"}, false)[0] == doctest::Approx(2.0).epsilon(1e-13));
        }
    }
    SUBCASE("uniform weights give classic OLS") {
        const auto s = testing::random_dyads(6, 4);
        const Matrix X = design_matrix(s, RegressionColumns::resolve(s, "y", {"x"}, true));
        const Vector y = s.column(0);
        const Vector classic = (X.transpose() * X).ldlt().solve(X.transpose() * y);
        const auto theta = weighted_ols(s, uniform_weights(s), "y", {"x"}, true);
        CHECK((theta - classic).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("matches the scaled-row oracle") {
        const auto s = testing::random_dyads(7, 5);
        const Matrix X = design_matrix(s, RegressionColumns::resolve(s, "y", {"x"}, true));
        for (std::uint64_t b = 0; b < 10; ++b) {
            const auto w = random_weights(s, b);
            const auto theta = weighted_ols(X, s.column(0), w.values);
            CHECK((theta - oracle::scaled_ols(X, s.column(0), w.values)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SUBCASE("singular design") {
        const auto s = testing::dyads(4, [](UnitId i, UnitId) { return std::vector<double>{double(i), 3.0}; },
                                      {"y", "x"});
        CHECK_THROWS_AS(weighted_ols(s, uniform_weights(s), "y", {"x"}, true), SingularDesign);
    }
}

TEST_CASE("weighted PPML") {
    SUBCASE("exact exponential fit") {
        const auto s = testing::dyads(4, [](UnitId i, UnitId j) {
            const double x = 0.2 * i - 0.1 * j;
            return std::vector<double>{std::exp(x), x};
        }, {"y", "x"});
        for (std::uint64_t b = 0; b < 5; ++b) {
            CHECK(weighted_ppml(s, random_weights(s, b), "y", {"x"}, false)[0] == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("constant y, intercept only") {
        const auto s = testing::dyads(3, [](UnitId, UnitId) { return std::vector<double>{4.5, 0.0}; }, {"y", "x"});
        CHECK(weighted_ppml(s, uniform_weights(s), "y", {}, true)[0] == doctest::Approx(std::log(4.5)).epsilon(1e-12));
    }
    SUBCASE("Poisson data: small score and IRLS agreement") {
        const auto s = poisson_dyads(12, 21);
        const auto cols = RegressionColumns::resolve(s, "y", {"x1", "x2"}, true);
        const Matrix X = design_matrix(s, cols);
        const Vector y = s.column(0);
        for (std::uint64_t b = 0; b < 5; ++b) {
            const auto w = random_weights(s, b);
            const Vector theta = ppml_fit(X, y, w.values).theta;
            const Vector mu = (X * theta).array().exp().matrix();
            const Vector score = X.transpose() * w.values.cwiseProduct(y - mu);
            CHECK(score.cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((theta - oracle::irls_ppml(X, y, w.values)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
    SUBCASE("errors") {
        const auto zero = testing::dyads(3, [](UnitId i, UnitId) { return std::vector<double>{0.0, double(i)}; },
                                         {"y", "x"});
        CHECK_THROWS_AS(weighted_ppml(zero, uniform_weights(zero), "y", {"x"}, true), SolverError);
        const auto neg = testing::dyads(3, [](UnitId i, UnitId) { return std::vector<double>{-1.0, double(i)}; },
                                        {"y", "x"});
        CHECK_THROWS_AS(weighted_ppml(neg, uniform_weights(neg), "y", {"x"}, true), DataError);
    }
}

TEST_CASE("solve_z") {
    const auto s = poisson_dyads(10, 3);
    const auto w = random_weights(s, 1);
    SUBCASE("mean moment") {
        const auto m = mean_moment(s, "x1");
        const auto r = solve_z(m, s, w, ParamVector::Zero(1));
        CHECK(r.theta[0] == doctest::Approx(weighted_mean(s, w, "x1")).epsilon(1e-12));
    }
    SUBCASE("PPML moment agrees with weighted_ppml") {
        const auto m = ppml_moment(s, "y", {"x1", "x2"}, true);
        const auto r = solve_z(m, s, w, m.initial(s, w));
        const auto direct = weighted_ppml(s, w, "y", {"x1", "x2"}, true);
        CHECK((r.theta - direct).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("OLS moment closed form") {
        const auto m = ols_moment(s, "y", {"x1"}, true);
        const auto r = solve_z(m, s, w, ParamVector::Zero(2));
        CHECK((r.theta - weighted_ols(s, w, "y", {"x1"}, true)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("requires L = K") {
        const auto m = linear_iv_moment(s, "y", {"x1"}, {"x1", "x2"}, false);
        CHECK_THROWS_AS(solve_z(m, s, w, ParamVector::Zero(1)), ParamError);
    }
}

TEST_CASE("analytic Jacobians match finite differences") {
    const auto s = poisson_dyads(6, 8);
    const std::vector<MomentFunction> moments{mean_moment(s, "x1"), ols_moment(s, "y", {"x1", "x2"}, true),
                                              ppml_moment(s, "y", {"x1", "x2"}, true),
                                              linear_iv_moment(s, "y", {"x1"}, {"x1", "x2"}, true)};
    for (const auto& m : moments) {
        if (!m.has_jacobian()) {
            continue;
        }
        ParamVector theta = ParamVector::Constant(static_cast<Eigen::Index>(m.num_params), 0.1);
        for (std::size_t i = 0; i < s.size(); i += 5) {
            const Matrix a = observation_jacobian(m, s.row(i), theta);
            const Matrix num = numeric_observation_jacobian(m, s.row(i), theta);
            CHECK(a.rows() == static_cast<Eigen::Index>(m.num_moments));
            CHECK((a - num).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + a.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("moment outputs have length L") {
    const auto s = poisson_dyads(5, 2);
    const auto m = linear_iv_moment(s, "y", {"x1"}, {"x1", "x2"}, true);
    CHECK(m.num_moments == 3);
    CHECK(m.num_params == 2);
    CHECK(m.param_names == std::vector<std::string>{kInterceptName, "x1"});
    const Matrix rows = moment_matrix(m, s, ParamVector::Zero(2));
    CHECK(rows.rows() == static_cast<Eigen::Index>(s.size()));
    CHECK(rows.cols() == 3);
    CHECK(rows.allFinite());
}

TEST_CASE("estimators ignore the scale of the unit draws") {
    const auto s = poisson_dyads(8, 6);
    auto d = draw_exponential_units(8, 4, 2);
    UnitDraw scaled;
    scaled.values = d.values;
    for (auto& v : scaled.values) {
        v *= 1e3;
    }
    const auto w1 = product_weights(d, s);
    const auto w2 = product_weights(scaled, s);
    CHECK((weighted_ppml(s, w1, "y", {"x1"}, true) - weighted_ppml(s, w2, "y", {"x1"}, true)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((weighted_ols(s, w1, "y", {"x1"}, true) - weighted_ols(s, w2, "y", {"x1"}, true)).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("estimator binding") {
    const auto s = poisson_dyads(6, 1);
    EstimatorSpec spec;
    spec.variant = OlsSpec{"y", {}, false};
    CHECK_THROWS_AS(Estimator::bind(spec, s), ParamError);
    spec.variant = OlsSpec{"nope", {"x1"}, false};
    CHECK_THROWS_AS(Estimator::bind(spec, s), DataError);
    spec.variant = GmmSpec{"linear-iv", "y", {"x1", "x2"}, {"x1"}, false, {}, {}};
    CHECK_THROWS_AS(Estimator::bind(spec, s), ParamError);
    spec.variant = PpmlSpec{"y", {"x1", "x2"}, true};
    const auto est = Estimator::bind(spec, s);
    CHECK(est.param_names() == std::vector<std::string>{kInterceptName, "x1", "x2"});
    CHECK(est.spec().kind() == "ppml");
    const auto out = est.evaluate(uniform_weights(s));
    CHECK((out.theta - weighted_ppml(s, uniform_weights(s), "y", {"x1", "x2"}, true)).cwiseAbs().maxCoeff() < 1e-12);
}
