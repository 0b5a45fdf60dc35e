// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "helpers.hpp"
#include "oracles.hpp"

#include "polyboot/bootstrap.hpp"
#include "polyboot/counterfactual.hpp"
#include "polyboot/coverage.hpp"
#include "polyboot/estimators.hpp"
#include "polyboot/fixtures.hpp"
#include "polyboot/gmm.hpp"
#include "polyboot/moments.hpp"
#include "polyboot/variance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace polyboot;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

template <class... Args>
std::string fmt(const char* format, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

EstimatorSpec mean_of(const std::string& column) {
    EstimatorSpec spec;
    spec.variant = MeanSpec{column};
    return spec;
}

EstimatorSpec ols_of(const std::string& y, const std::vector<std::string>& x, bool intercept) {
    EstimatorSpec spec;
    spec.variant = OlsSpec{y, x, intercept};
    return spec;
}

BootstrapOptions options(Scheme scheme, std::size_t B, std::uint64_t seed, double alpha = 0.0) {
    BootstrapOptions o;
    o.scheme = scheme;
    o.draws = B;
    o.seed = seed;
    o.alpha = alpha;
    return o;
}

std::vector<double> column(const Matrix& m, Eigen::Index k) {
    return {m.col(k).data(), m.col(k).data() + m.rows()};
}

double sd(const Matrix& draws, Eigen::Index k) {
    const auto c = draws.col(k);
    const double mean = c.mean();
    return std::sqrt((c.array() - mean).square().sum() / static_cast<double>(c.size() - 1));
}

// 1. Unit-level Dirichlet weights from normalized exponentials.
Outcome dirichlet_construction() {
    const std::size_t n = 10;
    const std::size_t R = 100000;
    std::vector<double> sum(n, 0.0), sq(n, 0.0);
    double s2 = 0.0, s2sq = 0.0;
    for (std::size_t b = 0; b < R; ++b) {
        const auto u = draw_exponential_units(n, 2024, b);
        double total = 0.0;
        for (const double v : u.values) {
            total += v;
        }
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = u.values[k] / total;
            sum[k] += w;
            sq[k] += w * w;
            ss += w * w;
        }
        s2 += ss;
        s2sq += ss * ss;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double m = sum[k] / R;
        const double se = std::sqrt((sq[k] / R - m * m) / R);
        worst = std::max(worst, std::abs(m - 0.1) / se);
    }
    const double m2 = s2 / R;
    const double se2 = std::sqrt((s2sq / R - m2 * m2) / R);
    const double z2 = std::abs(m2 - 2.0 / 11.0) / se2;
    return {worst <= 3.0 && z2 <= 3.0,
            fmt("max |E W_k - 0.1| = %.2f SE; E sum W^2 = %.6f vs %.6f (%.2f SE)", worst, m2, 2.0 / 11.0, z2)};
}

// 2. Weighted OLS equals OLS on sqrt(w)-scaled rows.
Outcome ols_reweighting() {
    std::mt19937_64 gen(77);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 4 + gen() % 9;
        const auto s = testing::dyads(
            n,
            [&](UnitId i, UnitId j) {
                std::normal_distribution<double> nd;
                const double x1 = nd(gen) + 0.2 * i;
                const double x2 = nd(gen) - 0.1 * j;
                return std::vector<double>{1.0 + 2.0 * x1 - x2 + nd(gen), x1, x2};
            },
            {"y", "x1", "x2"});
        BootstrapOptions o = options(rep % 2 == 0 ? Scheme::bayes : Scheme::prior, 1, 900 + rep, 0.5 * n);
        const auto w = draw_weights(s, o, 0);
        const auto cols = RegressionColumns::resolve(s, "y", {"x1", "x2"}, true);
        const Matrix X = design_matrix(s, cols);
        const Vector y = s.column(cols.y);
        const ParamVector fit = weighted_ols(X, y, w.values);
        const Vector ref = oracle::scaled_ols(X, y, w.values);
        worst = std::max(worst, (fit - ref).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-10, fmt("max abs deviation %.3g over 100 pairs", worst)};
}

// 3. Two-step GMM equals the root of the stacked just-identified system.
Outcome gmm_stacking() {
    const auto s = make_fixture("iv-overidentified");
    const auto m = linear_iv_moment(s, "y", {"x"}, {"z1", "z2", "z3"}, false);
    const auto stacked = stacked_two_step_moment(m);
    const auto layout = stacked_layout(m);
    double worst = 0.0;
    for (std::uint64_t b = 0; b < 20; ++b) {
        const auto w = product_weights(draw_exponential_units(s.n_units(), 31, b), s);
        const auto two = gmm_two_step(m, s, w);
        const auto init = stacked_initial_point(m, s, w, gmm_one_step(m, s, w).theta);
        const auto root = solve_z(stacked, s, w, init);
        worst = std::max(worst, std::abs(root.theta[static_cast<Eigen::Index>(layout.theta2())] - two.theta[0]));
    }
    return {worst <= 1e-6, fmt("max |theta_stacked - theta_two_step| = %.3g over 20 draws", worst)};
}

// 4. Accumulator Sigma_2 equals the literal triple loop.
Outcome graham_oracle() {
    double worst = 0.0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const std::size_t n = 3 + rep % 10;
        const auto s = testing::random_dyads(n, 500 + rep, 1.5);
        const auto m = ols_moment(s, "y", {"x"}, true);
        const auto theta = weighted_ols(s, uniform_weights(s), "y", {"x"}, true);
        const auto v = graham_variance(m, s, theta);
        const Matrix phi = moment_matrix(m, s, theta);
        worst = std::max(worst, (v.sigma2 - oracle::sigma2_triple_loop(s, phi)).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-12, fmt("max abs deviation %.3g over 50 samples, n in 3..12", worst)};
}

// 5. Coverage under the unit-effects DGP.
Outcome coverage_contrast() {
    CoverageConfig c;
    c.dgp = unit_effects_dgp(40, 1.0, 0.3);
    c.spec = mean_of("x");
    c.methods = {CoverageMethod::bayes, CoverageMethod::pigeonhole, CoverageMethod::naive};
    c.replications = 500;
    c.draws = 500;
    c.level = 0.95;
    c.seed = 5150;
    c.truth = ParamVector::Zero(1);
    const auto r = run_coverage(c);
    const double bayes = r.methods[0].coverage[0];
    const double pig = r.methods[1].coverage[0];
    const double naive = r.methods[2].coverage[0];
    const bool ok = bayes >= 0.90 && naive <= 0.80 && std::abs(pig - bayes) <= 0.07 &&
                    r.methods[0].evaluated == 500 && r.methods[1].evaluated == 500 && r.methods[2].evaluated == 500;
    return {ok, fmt("bayes %.3f, pigeonhole %.3f, naive %.3f (R=500, B=500)", bayes, pig, naive)};
}

// 6. Bayesian bootstrap, pigeonhole and analytic SEs agree at n = 100.
Outcome large_n_agreement() {
    const auto s = generate_synthetic(regression_dgp(100, 1.0, 2.0, 1.0, 1.0), 606, 0);
    const auto spec = ols_of("y", {"x"}, true);
    const auto est = Estimator::bind(spec, s);
    const auto bb = run_bootstrap(est, options(Scheme::bayes, 2000, 61));
    const auto ph = run_bootstrap(est, options(Scheme::pigeonhole, 2000, 62));
    const auto theta = est.estimate(uniform_weights(s));
    const Vector g = graham_variance(est.moment(), s, theta).se();
    bool ok = bb.failed == 0 && ph.failed == 0;
    std::string detail;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double a = sd(bb.draws, k);
        const double b = sd(ph.draws, k);
        const double c = g[k];
        const double hi = std::max({a, b, c});
        const double lo = std::min({a, b, c});
        ok = ok && hi / lo - 1.0 <= 0.15;
        detail += fmt("%s%s: bayes %.4g, pigeonhole %.4g, graham %.4g (spread %.1f%%)", k ? "; " : "",
                      est.param_names()[static_cast<std::size_t>(k)].c_str(), a, b, c, 100.0 * (hi / lo - 1.0));
    }
    return {ok, detail};
}

// 7. prior(alpha) approaches the Bayesian bootstrap as alpha grows to n.
Outcome prior_limit_chain() {
    const auto s = generate_synthetic(unit_effects_dgp(20, 1.0, 0.3), 707, 0);
    const auto est = Estimator::bind(mean_of("x"), s);
    const double n = static_cast<double>(s.n_units());
    const std::size_t B = 10000;
    const auto bayes = column(run_bootstrap(est, options(Scheme::bayes, B, 71)).draws, 0);
    std::vector<double> ks;
    for (const double alpha : {n / 4.0, n / 2.0, n}) {
        ks.push_back(ks_distance(column(run_bootstrap(est, options(Scheme::prior, B, 72, alpha)).draws, 0), bayes));
    }
    const double crit = ks_critical_value(B, B, 0.01);
    const bool ok = ks[0] > ks[1] && ks[1] > ks[2] && ks[2] < crit;
    return {ok, fmt("KS at alpha = n/4, n/2, n: %.4f, %.4f, %.4f; 1%% critical value %.4f", ks[0], ks[1], ks[2],
                    crit)};
}

struct AtomRun {
    double mass = 0.0;
    std::size_t atoms = 0;
};

AtomRun atom_mass(const PolyadicSample& s, AtomRule rule) {
    const auto est = Estimator::bind(ols_of("y", {"x"}, false), s);
    const std::size_t xc = s.column_index("x");
    const std::size_t yc = s.column_index("y");
    const FeatureMap rho = [xc, yc](std::span<const double> r) {
        Vector v(2);
        v << r[xc] * r[xc], r[xc] * r[yc];
        return v;
    };
    const MeanMap chi = [](const Vector& a) {
        ParamVector t(1);
        t[0] = a[1] / a[0];
        return t;
    };
    const auto atoms = limiting_prior_atoms(s, rho, chi, rule);
    const auto draws = run_marginal_prior(est, 1e-6 * static_cast<double>(s.n_units()), 4000, 88);
    return {mass_near_atoms(draws.draws, atoms, 1e-3), atoms.atoms.size()};
}

PolyadicSample four_units(bool symmetric_x) {
    const double xs[4][4] = {{0, 1.0, 2.0, 1.5}, {1.0, 0, 3.0, 2.5}, {2.0, 3.0, 0, 0.5}, {1.5, 2.5, 0.5, 0}};
    const double ys[4][4] = {{0, 1.2, 4.1, 2.0}, {2.9, 0, 5.5, 3.1}, {3.3, 6.8, 0, 0.9}, {2.6, 4.0, 1.4, 0}};
    return testing::dyads(
        4,
        [&](UnitId i, UnitId j) {
            const double x = symmetric_x ? xs[i][j] : xs[i][j] * (i < j ? 1.0 : 1.7);
            return std::vector<double>{ys[i][j], x};
        },
        {"y", "x"});
}

// 8. Tiny-alpha prior draws sit on the limiting atoms.
Outcome limiting_atoms(std::string& info) {
    const auto sym = atom_mass(four_units(true), AtomRule::midpoint);
    const auto asym_mid = atom_mass(four_units(false), AtomRule::midpoint);
    const auto asym_pair = atom_mass(four_units(false), AtomRule::pair_mean);
    info = fmt("asymmetric x: mass near midpoint atoms %.3f, near pair-mean atoms %.3f", asym_mid.mass,
               asym_pair.mass);
    return {sym.mass >= 0.95 && sym.atoms == 6,
            fmt("symmetric x, 4 units: %.3f of 4000 prior(4e-6) draws within 1e-3 of %zu atoms", sym.mass,
                sym.atoms)};
}

// 9. Counterfactual propagation through a monotone map.
Outcome counterfactual_propagation() {
    const auto s = generate_synthetic(regression_dgp(100, 0.5, 0.8, 1.0, 1.0), 909, 0);
    const auto est = Estimator::bind(ols_of("y", {"x"}, true), s);
    const auto res = run_bootstrap(est, options(Scheme::bayes, 2001, 91));
    const auto g = toy_growth(s, "x", 1);
    const double level = 0.95;
    const auto summary = summarize(propagate(s, res, g, 0), level, {});
    const auto ci = credible_interval(res, level);
    const double ga = g.eval(s, ci.lower)[0];
    const double gb = g.eval(s, ci.upper)[0];
    const bool exact = summary.outputs[0].lower == std::min(ga, gb) && summary.outputs[0].upper == std::max(ga, gb);

    const auto theta = res.point_estimate;
    const auto v = graham_variance(est.moment(), s, theta);
    const auto gm = [&](const ParamVector& t) { return g.eval(s, t)[0]; };
    const auto delta = delta_method_interval(gm(theta), numeric_gradient(gm, theta), v, level);
    const double boot_w = summary.outputs[0].upper - summary.outputs[0].lower;
    const double delta_w = delta.upper - delta.lower;
    const double rel = std::abs(delta_w / boot_w - 1.0);
    return {exact && rel <= 0.20 && res.failed == 0,
            fmt("endpoints exact: %s; width bootstrap %.4g vs delta %.4g (%.1f%%)", exact ? "yes" : "no", boot_w,
                delta_w, 100.0 * rel)};
}

// 10. Stochastic CLI commands are byte-identical across thread counts.
Outcome cli_determinism() {
    const auto dir = testing::scratch_dir("acceptance");
    const auto effects = write_fixture("unit-effects", kDefaultFixtureSeed, dir).string();
    const auto gravity = write_fixture("gravity", kDefaultFixtureSeed, dir).string();
    const auto atoms = testing::write_text(dir / "four.csv",
                                           "u1,u2,x,y\nA,B,1,1\nB,A,1,3\nA,C,2,2\nC,A,2,1\nA,D,1,3\nD,A,1,2\n"
                                           "B,C,3,1\nC,B,3,2\nB,D,2,2\nD,B,2,3\nC,D,1,1\nD,C,1,4\n");
    const std::vector<std::vector<std::string>> commands{
        {"bootstrap", "--data", effects, "--estimator", "mean", "--column", "x", "--method", "bayes", "--draws",
         "200", "--seed", "1", "--emit-draws"},
        {"bootstrap", "--data", effects, "--estimator", "mean", "--column", "x", "--method", "pigeonhole",
         "--draws", "200", "--seed", "2", "--emit-draws"},
        {"bootstrap", "--data", effects, "--estimator", "mean", "--column", "x", "--method", "prior", "--alpha",
         "10", "--draws", "200", "--seed", "3", "--emit-draws"},
        {"bootstrap", "--data", gravity, "--estimator", "ppml", "--y", "flow", "--x", "lndist,border",
         "--intercept", "--draws", "40", "--seed", "4", "--format", "csv"},
        {"counterfactual", "--data", gravity, "--estimator", "ppml", "--y", "flow", "--x", "lndist,border",
         "--intercept", "--draws", "40", "--seed", "5", "--counterfactual", "toy-growth:lndist", "--threshold",
         "1", "--emit-draws"},
        {"coverage-sim", "--dgp", "unit-effects", "--n", "12", "--replications", "8", "--draws", "50", "--seed",
         "6", "--truth", "0", "--methods", "bayes,pigeonhole,naive,graham"},
        {"coverage-sim", "--source", "pigeonhole", "--data", effects, "--estimator", "mean", "--column", "x",
         "--replications", "4", "--draws", "30", "--seed", "7"},
        {"marginal-prior-atoms", "--data", atoms, "--estimator", "ols", "--y", "y", "--x", "x", "--draws", "300",
         "--seed", "8"},
    };
    std::size_t same = 0;
    std::string failed;
    for (const auto& base : commands) {
        std::vector<std::string> outs;
        bool ok = true;
        for (const std::string threads : {"1", "2", "4"}) {
            auto args = base;
            args.insert(args.end(), {"--threads", threads});
            const auto r = testing::run(args);
            ok = ok && r.code == 0;
            outs.push_back(r.out);
        }
        ok = ok && outs[0] == outs[1] && outs[1] == outs[2] && !outs[0].empty();
        // A second run with the same flags.
        auto again = base;
        again.insert(again.end(), {"--threads", "1"});
        ok = ok && testing::run(again).out == outs[0];
        same += ok ? 1 : 0;
        if (!ok) {
            failed += " " + base[0];
        }
    }
    return {same == commands.size(),
            fmt("%zu of %zu commands identical across --threads 1, 2, 4 and on rerun%s", same, commands.size(),
                failed.empty() ? "" : ("; differing:" + failed).c_str())};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome(std::string&)> run;
    };
    auto plain = [](Outcome (*f)()) { return [f](std::string&) { return f(); }; };
    const std::vector<Criterion> criteria{
        {1, "dirichlet construction", plain(dirichlet_construction)},
        {2, "OLS reweighting identity", plain(ols_reweighting)},
        {3, "GMM stacking equivalence", plain(gmm_stacking)},
        {4, "Graham variance oracle", plain(graham_oracle)},
        {5, "coverage contrast", plain(coverage_contrast)},
        {6, "large-n method agreement", plain(large_n_agreement)},
        {7, "prior limit chain", plain(prior_limit_chain)},
        {8, "limiting-prior atoms", limiting_atoms},
        {9, "counterfactual propagation", plain(counterfactual_propagation)},
        {10, "determinism", plain(cli_determinism)},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string info;
        Outcome o;
        try {
            o = c.run(info);
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("C%-2d %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        if (!info.empty()) {
            std::printf("C%-2d INFO  %s\n", c.id, info.c_str());
        }
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
