#include "polyboot/bootstrap.hpp"

#include "polyboot/csv_io.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polyboot {

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::bayes:
            return "bayes";
        case Scheme::pigeonhole:
            return "pigeonhole";
        case Scheme::prior:
            return "prior";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "bayes") {
        return Scheme::bayes;
    }
    if (name == "pigeonhole") {
        return Scheme::pigeonhole;
    }
    if (name == "prior") {
        return Scheme::prior;
    }
    throw ConfigError("unknown resampling method '" + name + "' (expected bayes, pigeonhole or prior)");
}

namespace {

UnitDraw unit_draw(Scheme scheme, std::size_t n, double alpha, std::uint64_t seed, std::uint64_t b, StreamRole role,
                   std::uint64_t sub) {
    switch (scheme) {
        case Scheme::bayes:
            return draw_exponential_units(n, seed, b, role, sub);
        case Scheme::pigeonhole:
            return draw_pigeonhole_counts(n, seed, b, role, sub);
        case Scheme::prior:
            return draw_gamma_units(n, alpha, seed, b, role, sub);
    }
    throw ParamError("unknown scheme");
}

std::string method_tag(const BootstrapOptions& o) {
    if (o.scheme == Scheme::prior) {
        return "prior(" + format_double(o.alpha) + ")";
    }
    return scheme_name(o.scheme);
}

}  // namespace

ObservationWeights draw_weights(const PolyadicSample& sample, const BootstrapOptions& options, std::uint64_t b) {
    if (options.grouped && options.multiway) {
        throw ConfigError("grouped and multiway weights cannot be combined");
    }
    if (options.grouped) {
        if (!sample.has_groups()) {
            throw ConfigError("grouped weights need a group column");
        }
        if (options.scheme != Scheme::bayes) {
            throw ConfigError("grouped weights are only defined for the bayes scheme");
        }
        const auto sizes = group_sizes(sample);
        std::vector<UnitDraw> draws;
        draws.reserve(sizes.size());
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            draws.push_back(draw_exponential_units(sizes[g], options.seed, b, StreamRole::group_weights, g));
        }
        return grouped_product_weights(draws, sample);
    }
    const StreamRole role = options.scheme == Scheme::pigeonhole ? StreamRole::pigeonhole_units
                                                                  : StreamRole::unit_weights;
    const auto units = unit_draw(options.scheme, sample.n_units(), options.alpha, options.seed, b, role, 0);
    if (options.multiway) {
        if (!sample.has_cluster()) {
            throw ConfigError("multiway weights need a cluster column");
        }
        const double level_alpha = options.alpha * static_cast<double>(sample.n_cluster_levels()) /
                                   static_cast<double>(sample.n_units());
        const auto levels = unit_draw(options.scheme, sample.n_cluster_levels(), level_alpha, options.seed, b,
                                      StreamRole::cluster_weights, 0);
        return multiway_weights(units, levels, sample);
    }
    return product_weights(units, sample);
}

BootstrapResult run_bootstrap(const Estimator& estimator, const BootstrapOptions& options) {
    if (options.draws < 1) {
        throw ParamError("bootstrap needs at least one draw");
    }
    if (options.scheme == Scheme::prior && !(options.alpha > 0.0)) {
        throw ParamError("prior scheme needs alpha > 0");
    }
    const PolyadicSample& sample = estimator.sample();
    BootstrapResult res;
    res.method = method_tag(options);
    res.scheme = options.scheme;
    res.alpha = options.alpha;
    res.seed = options.seed;
    res.B = options.draws;
    res.param_names = estimator.param_names();
    res.point_estimate = estimator.estimate(uniform_weights(sample));

    const std::size_t B = options.draws;
    const auto K = static_cast<Eigen::Index>(estimator.dimension());
    std::vector<DrawRecord> records(B);
    Matrix all(static_cast<Eigen::Index>(B), K);
    parallel_for(B, options.threads, [&](std::size_t b) {
        DrawRecord& rec = records[b];
        rec.index = b;
        try {
            const auto w = draw_weights(sample, options, b);
            rec.zero_weight = static_cast<std::size_t>((w.values.array() == 0.0).count());
            const auto out = estimator.evaluate(w);
            all.row(static_cast<Eigen::Index>(b)) = out.theta.transpose();
            rec.iterations = out.iterations;
            rec.precision_floor = out.precision_floor;
            rec.ridged = out.ridged;
            rec.ok = true;
        } catch (const DegenerateDraw&) {
            rec.failure = "degenerate draw";
        } catch (const SingularWeightMatrix&) {
            rec.failure = "singular weight matrix";
        } catch (const SingularDesign&) {
            rec.failure = "singular design";
        } catch (const SolverError&) {
            rec.failure = "solver did not converge";
        }
    });

    std::vector<Eigen::Index> ok_rows;
    for (const auto& rec : records) {
        if (rec.ok) {
            ok_rows.push_back(static_cast<Eigen::Index>(rec.index));
            res.draw_indices.push_back(rec.index);
        } else {
            ++res.failed;
            ++res.failure_reasons[rec.failure];
        }
    }
    res.draws.resize(static_cast<Eigen::Index>(ok_rows.size()), K);
    for (std::size_t r = 0; r < ok_rows.size(); ++r) {
        res.draws.row(static_cast<Eigen::Index>(r)) = all.row(ok_rows[r]);
    }
    res.records = std::move(records);
    if (static_cast<double>(res.failed) > options.max_failure_fraction * static_cast<double>(B)) {
        std::string reasons;
        for (const auto& [why, count] : res.failure_reasons) {
            reasons += (reasons.empty() ? "" : ", ") + why + ": " + std::to_string(count);
        }
        throw BootstrapError(std::to_string(res.failed) + " of " + std::to_string(B) + " draws failed (" +
                             reasons + ")");
    }
    return res;
}

BootstrapResult run_bootstrap(const PolyadicSample& sample, const EstimatorSpec& spec,
                              const BootstrapOptions& options) {
    return run_bootstrap(Estimator::bind(spec, sample), options);
}

BootstrapResult run_marginal_prior(const Estimator& estimator, double alpha, std::size_t draws, std::uint64_t seed,
                                   unsigned threads) {
    if (!(alpha > 0.0)) {
        throw ParamError("prior precision alpha must be positive");
    }
    BootstrapOptions o;
    o.scheme = Scheme::prior;
    o.alpha = alpha;
    o.draws = draws;
    o.seed = seed;
    o.threads = threads;
    return run_bootstrap(estimator, o);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) {
        throw ParamError("quantile of an empty set");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ParamError("quantile probability must lie in [0, 1]");
    }
    double h = static_cast<double>(sorted.size() - 1) * p;
    // Probabilities like 0.025 are not exact in binary; land on the order
    // statistic they denote.
    const double r = std::round(h);
    if (std::abs(h - r) < 1e-9) {
        h = r;
    }
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

CredibleInterval credible_interval(const Matrix& draws, double level) {
    if (draws.rows() < 2) {
        throw ParamError("credible interval needs at least 2 successful draws");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ParamError("level must lie strictly between 0 and 1");
    }
    CredibleInterval ci;
    ci.level = level;
    ci.lower.resize(draws.cols());
    ci.upper.resize(draws.cols());
    const double tail = (1.0 - level) / 2.0;
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
        std::vector<double> col(draws.col(j).data(), draws.col(j).data() + draws.rows());
        std::sort(col.begin(), col.end());
        ci.lower[j] = quantile_sorted(col, tail);
        ci.upper[j] = quantile_sorted(col, 1.0 - tail);
    }
    return ci;
}

CredibleInterval credible_interval(const BootstrapResult& result, double level) {
    return credible_interval(result.draws, level);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw ParamError("KS distance needs two non-empty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_value(std::size_t m, std::size_t n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0) || m == 0 || n == 0) {
        throw ParamError("invalid KS critical value request");
    }
    const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    return c * std::sqrt((dm + dn) / (dm * dn));
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
    if (bins == 0) {
        throw ParamError("histogram needs at least one bin");
    }
    Histogram h;
    if (values.empty()) {
        return h;
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn;
    double hi = *mx;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        h.edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
    }
    h.counts.assign(bins, 0);
    for (const double v : values) {
        auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        ++h.counts[std::min(k, bins - 1)];
    }
    return h;
}

DiscreteAtomSet limiting_prior_atoms(const PolyadicSample& sample, const FeatureMap& rho, const MeanMap& chi,
                                     AtomRule rule) {
    if (sample.order() != 2) {
        throw Unsupported("limiting prior atoms are implemented for dyadic samples");
    }
    if (sample.has_cluster()) {
        throw Unsupported("limiting prior atoms do not support a cluster dimension");
    }
    const auto& labels = sample.unit_labels();
    auto eval = [&](const Vector& a, UnitId k, UnitId l) {
        ParamVector v;
        try {
            v = chi(a);
        } catch (const std::exception& e) {
            throw EvalError("chi undefined at pair (" + labels[k] + "," + labels[l] + "): " + e.what());
        }
        if (!v.allFinite()) {
            throw EvalError("chi undefined at pair (" + labels[k] + "," + labels[l] + ")");
        }
        return v;
    };

    DiscreteAtomSet out;
    const std::size_t n = sample.n_units();
    for (UnitId k = 0; k < n; ++k) {
        for (UnitId l = k + 1; l < n; ++l) {
            const UnitId fwd[2] = {k, l};
            const UnitId bwd[2] = {l, k};
            const auto a = sample.find(fwd);
            const auto b = sample.find(bwd);
            if (!a && !b) {
                continue;
            }
            DiscreteAtomSet::Atom atom;
            atom.first = k;
            atom.second = l;
            atom.both_directions = a && b;
            if (a && b) {
                const Vector ra = rho(sample.row(*a));
                const Vector rb = rho(sample.row(*b));
                if (rule == AtomRule::midpoint) {
                    atom.location = 0.5 * (eval(ra, k, l) + eval(rb, l, k));
                } else {
                    atom.location = eval(0.5 * (ra + rb), k, l);
                }
            } else if (a) {
                atom.location = eval(rho(sample.row(*a)), k, l);
            } else {
                atom.location = eval(rho(sample.row(*b)), l, k);
            }
            out.atoms.push_back(std::move(atom));
        }
    }
    for (auto& atom : out.atoms) {
        atom.mass = 1.0 / static_cast<double>(out.atoms.size());
    }
    return out;
}

double mass_near_atoms(const Matrix& draws, const DiscreteAtomSet& atoms, double tolerance) {
    if (draws.rows() == 0) {
        return 0.0;
    }
    std::size_t near = 0;
    for (Eigen::Index r = 0; r < draws.rows(); ++r) {
        for (const auto& atom : atoms.atoms) {
            if ((draws.row(r).transpose() - atom.location).cwiseAbs().maxCoeff() <= tolerance) {
                ++near;
                break;
            }
        }
    }
    return static_cast<double>(near) / static_cast<double>(draws.rows());
}

}  // namespace polyboot
