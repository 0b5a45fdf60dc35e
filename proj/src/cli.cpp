#include "polyboot/cli.hpp"

#include "polyboot/bootstrap.hpp"
#include "polyboot/counterfactual.hpp"
#include "polyboot/coverage.hpp"
#include "polyboot/csv_io.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/estimator_spec.hpp"
#include "polyboot/fixtures.hpp"
#include "polyboot/report.hpp"
#include "polyboot/variance.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace polyboot {

namespace {

struct DataArgs {
    std::string path;
    int order = 2;
    std::vector<std::string> units;
    std::vector<std::string> variables;
};

struct EstimatorArgs {
    std::string kind = "ols";
    std::string y;
    std::string column;
    std::vector<std::string> x;
    std::vector<std::string> z;
    bool intercept = false;
    std::string moment = "linear-iv";
    std::string gmm_mode = "two-step";
    std::string weight_matrix = "centered";
    double tolerance = 1e-10;
    int max_iter = 100;
};

struct OutputArgs {
    std::string path;
    std::string format = "json";
};

struct BootstrapArgs {
    std::string method = "bayes";
    double alpha = 0.0;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    std::vector<double> levels{0.95};
    bool emit_draws = false;
    bool multiway = false;
    bool grouped = false;
    std::size_t bins = 20;
    double max_failure_fraction = 0.2;
};

void add_data(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--data", a.path, "Input CSV")->required();
    cmd->add_option("--order", a.order, "Tuple arity P")->capture_default_str();
    cmd->add_option("--units", a.units, "Unit columns (default u1..uP)")->delimiter(',');
    cmd->add_option("--variables", a.variables, "Variable columns (default all others)")->delimiter(',');
}

void add_estimator(CLI::App* cmd, EstimatorArgs& a) {
    cmd->add_option("--estimator", a.kind, "mean, ols, ppml or gmm")->capture_default_str();
    cmd->add_option("--y", a.y, "Dependent variable");
    cmd->add_option("--column", a.column, "Column for the mean estimator");
    cmd->add_option("--x", a.x, "Regressors")->delimiter(',');
    cmd->add_option("--z", a.z, "Instruments (gmm linear-iv)")->delimiter(',');
    cmd->add_flag("--intercept", a.intercept, "Add an intercept");
    cmd->add_option("--moment", a.moment, "GMM moment: ols, ppml or linear-iv")->capture_default_str();
    cmd->add_option("--gmm-mode", a.gmm_mode, "one-step, two-step or iterated")->capture_default_str();
    cmd->add_option("--weight-matrix", a.weight_matrix, "centered or acm")->capture_default_str();
    cmd->add_option("--tolerance", a.tolerance, "Solver tolerance")->capture_default_str();
    cmd->add_option("--max-iter", a.max_iter, "Solver iteration cap")->capture_default_str();
}

void add_output(CLI::App* cmd, OutputArgs& a) {
    cmd->add_option("--output", a.path, "Write the report here instead of standard output");
    cmd->add_option("--format", a.format, "json or csv")->capture_default_str();
}

CLI::Option* add_bootstrap(CLI::App* cmd, BootstrapArgs& a) {
    cmd->add_option("--method", a.method, "bayes, pigeonhole or prior")->capture_default_str();
    cmd->add_option("--alpha", a.alpha, "Prior precision for --method prior");
    cmd->add_option("--draws", a.draws, "Number of draws B")->capture_default_str();
    auto* seed = cmd->add_option("--seed", a.seed, "Master seed (required)");
    cmd->add_option("--level", a.levels, "Credible level(s)")->delimiter(',');
    cmd->add_flag("--emit-draws", a.emit_draws, "Include every draw in the report");
    cmd->add_flag("--multiway", a.multiway, "Also reweight cluster levels");
    cmd->add_flag("--grouped", a.grouped, "Dirichlet weights within groups");
    cmd->add_option("--bins", a.bins, "Histogram bins")->capture_default_str();
    cmd->add_option("--max-failure-fraction", a.max_failure_fraction, "Tolerated fraction of failed draws")
        ->capture_default_str();
    return seed;
}

PolyadicSample load(const DataArgs& a) {
    CsvSchema s;
    s.order = a.order;
    s.unit_columns = a.units;
    s.variable_columns = a.variables;
    return load_csv(a.path, s);
}

GmmMode parse_mode(const std::string& s) {
    if (s == "one-step") {
        return GmmMode::one_step;
    }
    if (s == "two-step") {
        return GmmMode::two_step;
    }
    if (s == "iterated") {
        return GmmMode::iterated;
    }
    throw ConfigError("unknown --gmm-mode '" + s + "'");
}

WeightMatrixStyle parse_style(const std::string& s) {
    if (s == "centered") {
        return WeightMatrixStyle::centered;
    }
    if (s == "acm") {
        return WeightMatrixStyle::acm;
    }
    throw ConfigError("unknown --weight-matrix '" + s + "'");
}

EstimatorSpec make_spec(const EstimatorArgs& a) {
    EstimatorSpec spec;
    spec.solver.tolerance = a.tolerance;
    spec.solver.max_iterations = a.max_iter;
    if (a.kind == "mean") {
        const std::string col = a.column.empty() ? a.y : a.column;
        if (col.empty()) {
            throw ConfigError("mean estimator needs --column");
        }
        spec.variant = MeanSpec{col};
        return spec;
    }
    if (a.y.empty()) {
        throw ConfigError(a.kind + " estimator needs --y");
    }
    if (a.x.empty() && !a.intercept) {
        throw ConfigError(a.kind + " estimator needs --x or --intercept");
    }
    if (a.kind == "ols") {
        spec.variant = OlsSpec{a.y, a.x, a.intercept};
    } else if (a.kind == "ppml") {
        spec.variant = PpmlSpec{a.y, a.x, a.intercept};
    } else if (a.kind == "gmm") {
        GmmSpec g;
        g.moment = a.moment;
        g.y = a.y;
        g.x = a.x;
        g.z = a.z;
        g.intercept = a.intercept;
        g.settings.mode = parse_mode(a.gmm_mode);
        g.settings.style = parse_style(a.weight_matrix);
        g.settings.z_solver = spec.solver;
        g.settings.max_iterations = std::max(a.max_iter, g.settings.max_iterations);
        spec.variant = g;
    } else {
        throw ConfigError("unknown --estimator '" + a.kind + "' (expected mean, ols, ppml or gmm)");
    }
    return spec;
}

BootstrapOptions make_options(const BootstrapArgs& a, const CLI::Option* alpha_opt, unsigned threads) {
    BootstrapOptions o;
    o.scheme = parse_scheme(a.method);
    if (o.scheme == Scheme::prior && alpha_opt->count() == 0) {
        throw ConfigError("--method prior needs --alpha");
    }
    if (o.scheme != Scheme::prior && alpha_opt->count() > 0) {
        throw ConfigError("--alpha only applies to --method prior");
    }
    o.alpha = a.alpha;
    o.draws = a.draws;
    o.seed = a.seed;
    o.threads = threads;
    o.multiway = a.multiway;
    o.grouped = a.grouped;
    o.max_failure_fraction = a.max_failure_fraction;
    return o;
}

void require_seed(const CLI::Option* seed) {
    if (seed->count() == 0) {
        throw ConfigError("--seed is required for stochastic commands");
    }
}

void check_format(const OutputArgs& o) {
    if (o.format != "json" && o.format != "csv") {
        throw ConfigError("unknown --format '" + o.format + "' (expected json or csv)");
    }
}

void emit(const OutputArgs& o, std::ostream& out, const std::string& text) {
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot write '" + o.path + "'");
    }
    f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void merge(Json& into, const Json& from) {
    for (auto it = from.begin(); it != from.end(); ++it) {
        into[it.key()] = it.value();
    }
}

Json spec_json(const EstimatorSpec& spec, const Estimator& est) {
    return {{"kind", spec.kind()}, {"param_names", est.param_names()}};
}

ZSystem z_system_for(const Estimator& est, const ParamVector& theta) { return est.z_system(theta); }

VarianceEstimate analytic_variance(const std::string& method, const Estimator& est, const ParamVector& theta) {
    const auto z = z_system_for(est, theta);
    VarianceEstimate full;
    if (method == "graham") {
        full = graham_variance(z.moment, est.sample(), z.point);
    } else if (method == "naive") {
        full = naive_dyad_robust(z.moment, est.sample(), z.point);
    } else {
        throw ConfigError("unknown variance method '" + method + "' (expected graham or naive)");
    }
    if (z.theta_index.size() == static_cast<std::size_t>(full.covariance.rows())) {
        return full;
    }
    return select_parameters(full, z.theta_index);
}

// -- coverage configuration --------------------------------------------------

struct CoverageArgs {
    std::string config;
    std::string source = "synthetic";
    std::string dgp = "unit-effects";
    std::size_t n = 40;
    double sigma_c = 1.0;
    double sigma_eps = 0.3;
    double beta0 = 0.0;
    double beta1 = 1.0;
    double value = 1.0;
    std::size_t replications = 100;
    std::size_t draws = 500;
    std::vector<std::string> methods{"bayes", "pigeonhole", "naive"};
    double level = 0.95;
    std::uint64_t seed = 0;
    std::vector<double> truth;
    bool progress = false;
};

template <class T>
void overlay(const Json& cfg, const char* key, const CLI::Option* opt, T& target) {
    if (cfg.contains(key) && opt->count() == 0) {
        target = cfg.at(key).get<T>();
    }
}

SyntheticDGP make_dgp(const CoverageArgs& a) {
    if (a.dgp == "unit-effects") {
        return unit_effects_dgp(a.n, a.sigma_c, a.sigma_eps);
    }
    if (a.dgp == "regression") {
        return regression_dgp(a.n, a.beta0, a.beta1, a.sigma_c, a.sigma_eps);
    }
    if (a.dgp == "sender") {
        return sender_dgp(a.n, a.sigma_eps);
    }
    if (a.dgp == "constant") {
        return constant_dgp(a.n, a.value);
    }
    throw ConfigError("unknown --dgp '" + a.dgp + "' (expected unit-effects, regression, sender or constant)");
}

// -- commands ------------------------------------------------------------------

struct Ctx {
    std::ostream& out;
    std::ostream& err;
    unsigned threads = 0;
};

int cmd_estimate(Ctx& c, const DataArgs& d, const EstimatorArgs& e, const OutputArgs& o) {
    check_format(o);
    const auto sample = load(d);
    const auto spec = make_spec(e);
    const auto est = Estimator::bind(spec, sample);
    const auto r = est.evaluate(uniform_weights(sample));
    if (o.format == "csv") {
        std::ostringstream s;
        s << "parameter,estimate\n";
        for (std::size_t k = 0; k < est.dimension(); ++k) {
            s << est.param_names()[k] << ',' << format_double(r.theta[static_cast<Eigen::Index>(k)]) << '\n';
        }
        emit(o, c.out, s.str());
        return kExitOk;
    }
    Json j;
    j["command"] = "estimate";
    j["estimator"] = spec_json(spec, est);
    j["n_units"] = sample.n_units();
    j["observations"] = sample.size();
    j["point_estimate"] = to_json(r.theta);
    j["iterations"] = r.iterations;
    j["precision_floor"] = r.precision_floor;
    j["ridged"] = r.ridged;
    Json diags = Json::array();
    for (const auto& dg : validate(sample)) {
        diags.push_back(dg.message);
    }
    j["data_diagnostics"] = diags;
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_bootstrap(Ctx& c, const DataArgs& d, const EstimatorArgs& e, const OutputArgs& o, const BootstrapArgs& b,
                  const CLI::Option* seed, const CLI::Option* alpha) {
    check_format(o);
    require_seed(seed);
    const auto opts = make_options(b, alpha, c.threads);
    const auto sample = load(d);
    const auto spec = make_spec(e);
    const auto est = Estimator::bind(spec, sample);
    const auto res = run_bootstrap(est, opts);
    if (o.format == "csv") {
        std::ostringstream s;
        bootstrap_csv(res, b.levels, s);
        emit(o, c.out, s.str());
        return kExitOk;
    }
    BootstrapReportOptions ro;
    ro.levels = b.levels;
    ro.emit_draws = b.emit_draws;
    ro.histogram_bins = b.bins;
    Json j;
    j["command"] = "bootstrap";
    j["estimator"] = spec_json(spec, est);
    merge(j, bootstrap_report(res, ro));
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_variance(Ctx& c, const DataArgs& d, const EstimatorArgs& e, const OutputArgs& o, const std::string& method,
                 double level) {
    check_format(o);
    const auto sample = load(d);
    const auto spec = make_spec(e);
    const auto est = Estimator::bind(spec, sample);
    const ParamVector theta = est.estimate(uniform_weights(sample));
    const auto v = analytic_variance(method, est, theta);
    const Vector se = v.se();
    const double z = normal_quantile(0.5 + level / 2.0);
    if (o.format == "csv") {
        std::ostringstream s;
        s << "parameter,estimate,se,lower,upper\n";
        for (std::size_t k = 0; k < est.dimension(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            s << est.param_names()[k] << ',' << format_double(theta[i]) << ',' << format_double(se[i]) << ','
              << format_double(theta[i] - z * se[i]) << ',' << format_double(theta[i] + z * se[i]) << '\n';
        }
        emit(o, c.out, s.str());
        return kExitOk;
    }
    Json j;
    j["command"] = "variance";
    j["estimator"] = spec_json(spec, est);
    j["point_estimate"] = to_json(theta);
    merge(j, variance_report(v, est.param_names()));
    j["level"] = level;
    j["interval"] = {{"lower", to_json(Vector(theta - z * se))}, {"upper", to_json(Vector(theta + z * se))}};
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_counterfactual(Ctx& c, const DataArgs& d, const EstimatorArgs& e, const OutputArgs& o,
                       const BootstrapArgs& b, const CLI::Option* seed, const CLI::Option* alpha,
                       const std::string& cf, const std::vector<double>& thresholds, const std::string& delta) {
    check_format(o);
    require_seed(seed);
    const auto opts = make_options(b, alpha, c.threads);
    const auto sample = load(d);
    const auto spec = make_spec(e);
    const auto est = Estimator::bind(spec, sample);
    const auto g = CounterfactualRegistry::with_builtins().make(cf, sample, est.param_names());
    const auto res = run_bootstrap(est, opts);
    const auto preds = propagate(sample, res, g, c.threads);
    const double level = b.levels.front();
    const auto summary = summarize(preds, level, thresholds);

    std::optional<std::vector<Interval>> delta_iv;
    if (delta != "none") {
        const auto v = analytic_variance(delta, est, res.point_estimate);
        std::vector<Interval> ivs;
        for (Eigen::Index m = 0; m < preds.point.size(); ++m) {
            const auto gm = [&](const ParamVector& t) { return g.eval(sample, t)[m]; };
            ivs.push_back(delta_method_interval(preds.point[m], numeric_gradient(gm, res.point_estimate), v, level));
        }
        delta_iv = std::move(ivs);
    }

    if (o.format == "csv") {
        std::ostringstream s;
        s << "output,point,level,lower,upper\n";
        for (const auto& out : summary.outputs) {
            s << out.name << ',' << format_double(out.point) << ',' << format_double(level) << ','
              << format_double(out.lower) << ',' << format_double(out.upper) << '\n';
        }
        emit(o, c.out, s.str());
        return kExitOk;
    }
    Json j;
    j["command"] = "counterfactual";
    j["estimator"] = spec_json(spec, est);
    j["theta"] = {{"method", res.method},   {"seed", res.seed},
                  {"B", res.B},             {"failed", res.failed},
                  {"point_estimate", to_json(res.point_estimate)}};
    merge(j, counterfactual_report(preds, summary, b.emit_draws));
    if (delta_iv) {
        Json dj = Json::array();
        for (const auto& iv : *delta_iv) {
            dj.push_back({{"lower", iv.lower}, {"upper", iv.upper}});
        }
        j["delta_method"] = {{"variance", delta}, {"intervals", dj}};
    }
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_atoms(Ctx& c, const DataArgs& d, const EstimatorArgs& e, const OutputArgs& o, const std::string& rule_name,
              std::size_t draws, const CLI::Option* draws_opt, std::uint64_t seed_v, const CLI::Option* seed,
              double alpha, const CLI::Option* alpha_opt, double tolerance) {
    check_format(o);
    const auto sample = load(d);
    const auto spec = make_spec(e);
    const auto est = Estimator::bind(spec, sample);
    FeatureMap rho;
    MeanMap chi;
    if (const auto* m = std::get_if<MeanSpec>(&spec.variant)) {
        const auto col = sample.column_index(m->column);
        rho = [col](std::span<const double> r) {
            Vector v(1);
            v[0] = r[col];
            return v;
        };
        chi = [](const Vector& a) { return ParamVector(a); };
    } else if (const auto* ols = std::get_if<OlsSpec>(&spec.variant); ols && ols->x.size() == 1 && !ols->intercept) {
        const auto xc = sample.column_index(ols->x[0]);
        const auto yc = sample.column_index(ols->y);
        rho = [xc, yc](std::span<const double> r) {
            Vector v(2);
            v[0] = r[xc] * r[xc];
            v[1] = r[xc] * r[yc];
            return v;
        };
        chi = [](const Vector& a) {
            ParamVector t(1);
            t[0] = a[1] / a[0];
            return t;
        };
    } else {
        throw ConfigError("marginal-prior-atoms supports the mean and single-regressor OLS without intercept");
    }
    AtomRule rule;
    if (rule_name == "midpoint") {
        rule = AtomRule::midpoint;
    } else if (rule_name == "pair-mean") {
        rule = AtomRule::pair_mean;
    } else {
        throw ConfigError("unknown --rule '" + rule_name + "' (expected midpoint or pair-mean)");
    }
    const auto atoms = limiting_prior_atoms(sample, rho, chi, rule);
    Json j;
    j["command"] = "marginal-prior-atoms";
    j["estimator"] = spec_json(spec, est);
    j["rule"] = rule_name;
    j["atoms"] = atoms_report(atoms, sample)["atoms"];
    if (draws_opt->count() > 0) {
        require_seed(seed);
        const double a = alpha_opt->count() > 0 ? alpha : 1e-6 * static_cast<double>(sample.n_units());
        const auto res = run_marginal_prior(est, a, draws, seed_v, c.threads);
        j["prior_draws"] = {{"method", res.method},
                            {"seed", res.seed},
                            {"B", res.B},
                            {"failed", res.failed},
                            {"tolerance", tolerance},
                            {"mass_near_atoms", mass_near_atoms(res.draws, atoms, tolerance)}};
    }
    if (o.format == "csv") {
        std::ostringstream s;
        s << "first,second,both_directions,mass";
        for (std::size_t k = 0; k < est.dimension(); ++k) {
            s << ',' << est.param_names()[k];
        }
        s << '\n';
        for (const auto& at : atoms.atoms) {
            s << sample.unit_labels()[at.first] << ',' << sample.unit_labels()[at.second] << ','
              << (at.both_directions ? 1 : 0) << ',' << format_double(at.mass);
            for (Eigen::Index k = 0; k < at.location.size(); ++k) {
                s << ',' << format_double(at.location[k]);
            }
            s << '\n';
        }
        emit(o, c.out, s.str());
        return kExitOk;
    }
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_coverage(Ctx& c, CoverageArgs a, const std::map<std::string, CLI::Option*>& opts, DataArgs d,
                 const CLI::Option* data_opt, EstimatorArgs e, const CLI::Option* estimator_opt,
                 const OutputArgs& o) {
    check_format(o);
    bool have_estimator = estimator_opt->count() > 0;
    bool have_seed = opts.at("seed")->count() > 0;
    if (!a.config.empty()) {
        std::ifstream f(a.config);
        if (!f) {
            throw ConfigError("cannot read config '" + a.config + "'");
        }
        Json cfg;
        try {
            cfg = Json::parse(f);
        } catch (const std::exception& ex) {
            throw ConfigError(std::string("invalid config JSON: ") + ex.what());
        }
        overlay(cfg, "source", opts.at("source"), a.source);
        overlay(cfg, "replications", opts.at("replications"), a.replications);
        overlay(cfg, "draws", opts.at("draws"), a.draws);
        overlay(cfg, "methods", opts.at("methods"), a.methods);
        overlay(cfg, "level", opts.at("level"), a.level);
        overlay(cfg, "seed", opts.at("seed"), a.seed);
        overlay(cfg, "truth", opts.at("truth"), a.truth);
        if (cfg.contains("data") && data_opt->count() == 0) {
            d.path = cfg.at("data").get<std::string>();
        }
        if (cfg.contains("dgp")) {
            const Json& g = cfg.at("dgp");
            overlay(g, "name", opts.at("dgp"), a.dgp);
            overlay(g, "n", opts.at("n"), a.n);
            overlay(g, "sigma_c", opts.at("sigma-c"), a.sigma_c);
            overlay(g, "sigma_eps", opts.at("sigma-eps"), a.sigma_eps);
            overlay(g, "beta0", opts.at("beta0"), a.beta0);
            overlay(g, "beta1", opts.at("beta1"), a.beta1);
            overlay(g, "value", opts.at("value"), a.value);
        }
        if (cfg.contains("estimator") && !have_estimator) {
            const Json& s = cfg.at("estimator");
            e.kind = s.value("kind", e.kind);
            e.y = s.value("y", e.y);
            e.column = s.value("column", e.column);
            e.x = s.value("x", e.x);
            e.z = s.value("z", e.z);
            e.intercept = s.value("intercept", e.intercept);
            e.moment = s.value("moment", e.moment);
            have_estimator = true;
        }
        have_seed = have_seed || cfg.contains("seed");
    }
    if (!have_seed) {
        throw ConfigError("--seed (or a config seed) is required for coverage-sim");
    }

    CoverageConfig cc;
    std::optional<PolyadicSample> source_sample;
    if (a.source == "synthetic") {
        cc.source = CoverageConfig::Source::synthetic;
        cc.dgp = make_dgp(a);
        if (!have_estimator) {
            if (a.dgp == "regression") {
                e.kind = "ols";
                e.y = "y";
                e.x = {"x"};
                e.intercept = true;
            } else {
                e.kind = "mean";
                e.column = "x";
            }
        }
    } else if (a.source == "pigeonhole") {
        if (d.path.empty()) {
            throw ConfigError("--source pigeonhole needs --data");
        }
        cc.source = CoverageConfig::Source::pigeonhole_of;
        source_sample = load(d);
        cc.sample = &*source_sample;
        if (!have_estimator) {
            throw ConfigError("--source pigeonhole needs --estimator");
        }
    } else {
        throw ConfigError("unknown --source '" + a.source + "' (expected synthetic or pigeonhole)");
    }
    cc.spec = make_spec(e);
    cc.methods.clear();
    for (const auto& m : a.methods) {
        cc.methods.push_back(parse_method(m));
    }
    cc.replications = a.replications;
    cc.draws = a.draws;
    cc.level = a.level;
    cc.seed = a.seed;
    cc.threads = c.threads;
    if (!a.truth.empty()) {
        cc.truth = Eigen::Map<const Vector>(a.truth.data(), static_cast<Eigen::Index>(a.truth.size()));
    }
    if (a.progress) {
        std::ostream& err = c.err;
        cc.progress = [&err](std::size_t done, std::size_t total) {
            err << "replication " << done << "/" << total << "\n";
        };
    }
    const auto rep = run_coverage(cc);
    if (o.format == "csv") {
        std::ostringstream s;
        coverage_csv(rep, s);
        emit(o, c.out, s.str());
        return kExitOk;
    }
    Json j;
    j["command"] = "coverage-sim";
    j["estimator"] = {{"kind", cc.spec.kind()}};
    merge(j, coverage_report(rep));
    emit(o, c.out, dump(j));
    return kExitOk;
}

int cmd_fixture(Ctx& c, const std::string& name, std::uint64_t seed, const std::string& dir) {
    std::vector<std::string> names = name == "all" ? fixture_names() : std::vector<std::string>{name};
    Json files = Json::array();
    for (const auto& n : names) {
        fixture_description(n);  // rejects unknown names before writing
        const auto path = write_fixture(n, seed, dir);
        files.push_back({{"name", n}, {"seed", seed}, {"path", path.string()}, {"description", fixture_description(n)}});
    }
    Json j;
    j["command"] = "make-fixture";
    j["files"] = files;
    c.out << dump(j);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian bootstrap for polyadic data", "polyboot"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");

    DataArgs data;
    EstimatorArgs est;
    OutputArgs output;
    BootstrapArgs boot;

    auto* estimate = app.add_subcommand("estimate", "Point estimate at uniform weights");
    auto* bootstrap = app.add_subcommand("bootstrap", "Resampling draws and credible intervals");
    auto* variance = app.add_subcommand("variance", "Analytic dyadic-robust variance");
    auto* counterfactual = app.add_subcommand("counterfactual", "Propagate draws through a counterfactual map");
    auto* coverage = app.add_subcommand("coverage-sim", "Monte Carlo coverage experiment");
    auto* atoms = app.add_subcommand("marginal-prior-atoms", "Atoms of the limiting marginal prior");
    auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic fixture CSV");

    for (auto* cmd : {estimate, bootstrap, variance, counterfactual, coverage, atoms}) {
        cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
        add_output(cmd, output);
    }
    for (auto* cmd : {estimate, bootstrap, variance, counterfactual, atoms}) {
        add_data(cmd, data);
        add_estimator(cmd, est);
    }

    auto* boot_seed = add_bootstrap(bootstrap, boot);
    auto* boot_alpha = bootstrap->get_option("--alpha");

    std::string variance_method = "graham";
    double variance_level = 0.95;
    variance->add_option("--method", variance_method, "graham or naive")->capture_default_str();
    variance->add_option("--level", variance_level, "Interval level")->capture_default_str();

    BootstrapArgs cf_boot;
    auto* cf_seed = add_bootstrap(counterfactual, cf_boot);
    auto* cf_alpha = counterfactual->get_option("--alpha");
    std::string cf_name = "identity";
    std::vector<double> thresholds;
    std::string delta = "none";
    counterfactual->add_option("--counterfactual", cf_name, "identity or toy-growth:<column>[:<param>]")
        ->capture_default_str();
    counterfactual->add_option("--threshold", thresholds, "Exceedance thresholds")->delimiter(',');
    counterfactual->add_option("--delta", delta, "Delta-method interval from graham, naive or none")
        ->capture_default_str();

    std::string rule = "midpoint";
    std::size_t atom_draws = 0;
    std::uint64_t atom_seed = 0;
    double atom_alpha = 0.0;
    double atom_tol = 1e-3;
    atoms->add_option("--rule", rule, "midpoint or pair-mean")->capture_default_str();
    auto* atom_draws_opt = atoms->add_option("--draws", atom_draws, "Also run this many prior draws");
    auto* atom_seed_opt = atoms->add_option("--seed", atom_seed, "Seed for the prior draws");
    auto* atom_alpha_opt = atoms->add_option("--alpha", atom_alpha, "Prior precision (default 1e-6 n)");
    atoms->add_option("--atom-tolerance", atom_tol, "Distance counted as at an atom")->capture_default_str();

    CoverageArgs cov;
    DataArgs cov_data;
    EstimatorArgs cov_est;
    std::map<std::string, CLI::Option*> cov_opts;
    cov_opts["config"] = coverage->add_option("--config", cov.config, "JSON configuration file");
    cov_opts["source"] = coverage->add_option("--source", cov.source, "synthetic or pigeonhole");
    cov_opts["dgp"] = coverage->add_option("--dgp", cov.dgp, "unit-effects, regression, sender or constant");
    cov_opts["n"] = coverage->add_option("--n", cov.n, "Units per synthetic sample");
    cov_opts["sigma-c"] = coverage->add_option("--sigma-c", cov.sigma_c, "Unit effect SD");
    cov_opts["sigma-eps"] = coverage->add_option("--sigma-eps", cov.sigma_eps, "Idiosyncratic noise SD");
    cov_opts["beta0"] = coverage->add_option("--beta0", cov.beta0, "Regression DGP intercept");
    cov_opts["beta1"] = coverage->add_option("--beta1", cov.beta1, "Regression DGP slope");
    cov_opts["value"] = coverage->add_option("--value", cov.value, "Constant DGP value");
    cov_opts["replications"] = coverage->add_option("--replications", cov.replications, "Replications R");
    cov_opts["draws"] = coverage->add_option("--draws", cov.draws, "Bootstrap draws per replication");
    cov_opts["methods"] = coverage->add_option("--methods", cov.methods, "bayes,pigeonhole,naive,graham")
                              ->delimiter(',');
    cov_opts["level"] = coverage->add_option("--level", cov.level, "Nominal level");
    cov_opts["seed"] = coverage->add_option("--seed", cov.seed, "Master seed (required)");
    cov_opts["truth"] = coverage->add_option("--truth", cov.truth, "Estimand override")->delimiter(',');
    coverage->add_flag("--progress", cov.progress, "Print replication counters to standard error");
    auto* cov_data_opt = coverage->add_option("--data", cov_data.path, "Source CSV for --source pigeonhole");
    coverage->add_option("--order", cov_data.order, "Tuple arity P");
    auto* cov_est_opt = coverage->add_option("--estimator", cov_est.kind, "mean, ols, ppml or gmm");
    coverage->add_option("--y", cov_est.y, "Dependent variable");
    coverage->add_option("--column", cov_est.column, "Column for the mean estimator");
    coverage->add_option("--x", cov_est.x, "Regressors")->delimiter(',');
    coverage->add_option("--z", cov_est.z, "Instruments")->delimiter(',');
    coverage->add_flag("--intercept", cov_est.intercept, "Add an intercept");
    coverage->add_option("--moment", cov_est.moment, "GMM moment");

    std::string fixture_name;
    std::uint64_t fixture_seed = kDefaultFixtureSeed;
    std::string fixture_dir = ".";
    fixture->add_option("--name", fixture_name, "Fixture name or 'all'")->required();
    fixture->add_option("--seed", fixture_seed, "Generator seed")->capture_default_str();
    fixture->add_option("--output", fixture_dir, "Output directory")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help requests surface as CallForHelp from the subcommand.
        if (e.get_exit_code() == 0) {
            for (auto* sub : app.get_subcommands()) {
                out << sub->help();
            }
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    Ctx ctx{out, err, threads};
    try {
        if (*estimate) {
            return cmd_estimate(ctx, data, est, output);
        }
        if (*bootstrap) {
            return cmd_bootstrap(ctx, data, est, output, boot, boot_seed, boot_alpha);
        }
        if (*variance) {
            return cmd_variance(ctx, data, est, output, variance_method, variance_level);
        }
        if (*counterfactual) {
            return cmd_counterfactual(ctx, data, est, output, cf_boot, cf_seed, cf_alpha, cf_name, thresholds,
                                      delta);
        }
        if (*coverage) {
            return cmd_coverage(ctx, cov, cov_opts, cov_data, cov_data_opt, cov_est, cov_est_opt, output);
        }
        if (*atoms) {
            return cmd_atoms(ctx, data, est, output, rule, atom_draws, atom_draws_opt, atom_seed, atom_seed_opt,
                             atom_alpha, atom_alpha_opt, atom_tol);
        }
        if (*fixture) {
            return cmd_fixture(ctx, fixture_name, fixture_seed, fixture_dir);
        }
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const BootstrapError& e) {
        err << "bootstrap error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const DegenerateDraw& e) {
        err << "degenerate draw: " << e.what() << "\n";
        return kExitSolver;
    } catch (const EvalError& e) {
        err << "evaluation error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const CounterfactualError& e) {
        err << "counterfactual error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const DgpError& e) {
        err << "simulation error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParamError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Unsupported& e) {
        err << "unsupported: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitConfig;
}

}  // namespace polyboot
