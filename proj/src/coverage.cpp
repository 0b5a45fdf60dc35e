#include "polyboot/coverage.hpp"

#include "polyboot/errors.hpp"
#include "polyboot/parallel.hpp"
#include "polyboot/variance.hpp"
#include "polyboot/weights.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

namespace polyboot {

SyntheticDGP constant_dgp(std::size_t n, double value) {
    SyntheticDGP d;
    d.name = "constant";
    d.n = n;
    d.latent_dim = 1;
    d.variable_names = {"x"};
    d.link = [value](std::span<const double>, std::span<const double>, Stream&, std::span<double> out) {
        out[0] = value;
    };
    return d;
}

SyntheticDGP sender_dgp(std::size_t n, double noise_sd) {
    SyntheticDGP d;
    d.name = "sender";
    d.n = n;
    d.latent_dim = 1;
    d.variable_names = {"x"};
    d.link = [noise_sd](std::span<const double> ci, std::span<const double>, Stream& noise, std::span<double> out) {
        out[0] = ci[0] + (noise_sd > 0.0 ? noise_sd * noise.normal() : 0.0);
    };
    return d;
}

SyntheticDGP unit_effects_dgp(std::size_t n, double sigma_c, double sigma_eps) {
    SyntheticDGP d;
    d.name = "unit-effects";
    d.n = n;
    d.latent_dim = 1;
    d.latent_sd = sigma_c;
    d.variable_names = {"x"};
    d.link = [sigma_eps](std::span<const double> ci, std::span<const double> cj, Stream& noise,
                         std::span<double> out) {
        out[0] = ci[0] + cj[0] + (sigma_eps > 0.0 ? sigma_eps * noise.normal() : 0.0);
    };
    return d;
}

SyntheticDGP regression_dgp(std::size_t n, double beta0, double beta1, double sigma_c, double sigma_eps) {
    SyntheticDGP d;
    d.name = "regression";
    d.n = n;
    d.latent_dim = 2;
    d.latent_sd = sigma_c;
    d.variable_names = {"y", "x"};
    d.link = [beta0, beta1, sigma_eps](std::span<const double> ci, std::span<const double> cj, Stream& noise,
                                       std::span<double> out) {
        const double x = ci[0] + cj[0] + noise.normal();
        out[1] = x;
        out[0] = beta0 + beta1 * x + ci[1] + cj[1] + sigma_eps * noise.normal();
    };
    return d;
}

PolyadicSample generate_synthetic(const SyntheticDGP& dgp, std::uint64_t seed, std::uint64_t r) {
    if (dgp.n < 2) {
        throw ParamError("synthetic DGP needs at least 2 units");
    }
    if (!dgp.link) {
        throw ParamError("synthetic DGP has no link function");
    }
    const std::size_t n = dgp.n;
    const std::size_t d = dgp.latent_dim;
    Stream latent(seed, r, StreamRole::dgp_latent);
    std::vector<double> C(n * d);
    for (auto& c : C) {
        c = dgp.latent_sd * latent.normal();
    }
    Stream noise(seed, r, StreamRole::dgp_noise);
    std::vector<std::string> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
        labels[k] = "u" + std::to_string(k);
    }
    std::vector<Observation> obs;
    obs.reserve(n * (n - 1));
    const std::size_t m = dgp.variable_names.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            Observation o;
            o.index = {static_cast<UnitId>(i), static_cast<UnitId>(j)};
            o.variables.assign(m, 0.0);
            dgp.link(std::span<const double>(C.data() + i * d, d), std::span<const double>(C.data() + j * d, d),
                     noise, o.variables);
            obs.push_back(std::move(o));
        }
    }
    return PolyadicSample::build(2, std::move(labels), dgp.variable_names, std::move(obs));
}

PolyadicSample pigeonhole_replicate(const PolyadicSample& sample, const std::vector<double>& counts) {
    if (sample.order() != 2) {
        throw Unsupported("pigeonhole resampling DGP needs dyadic data");
    }
    if (counts.size() != sample.n_units()) {
        throw ParamError("one count per unit required");
    }
    // copies[k] = synthetic unit ids of unit k's copies.
    std::vector<std::vector<UnitId>> copies(sample.n_units());
    std::vector<std::string> labels;
    std::vector<std::uint32_t> group_of;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const auto c = static_cast<std::size_t>(counts[k]);
        for (std::size_t a = 0; a < c; ++a) {
            copies[k].push_back(static_cast<UnitId>(labels.size()));
            labels.push_back(a == 0 ? sample.unit_labels()[k]
                                    : sample.unit_labels()[k] + "#" + std::to_string(a + 1));
            if (sample.has_groups()) {
                group_of.push_back(sample.groups().group_of_unit[k]);
            }
        }
    }
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto t = sample.tuple(i);
        const auto row = sample.row(i);
        for (const auto a : copies[t[0]]) {
            for (const auto b : copies[t[1]]) {
                Observation o;
                o.index = {a, b};
                o.variables.assign(row.begin(), row.end());
                o.cluster_level = sample.cluster_level(i);
                obs.push_back(std::move(o));
            }
        }
    }
    if (obs.empty()) {
        throw DegenerateDraw("resampled units share no observed dyad");
    }
    std::optional<GroupMap> groups;
    if (sample.has_groups()) {
        groups = GroupMap{std::move(group_of), sample.groups().labels};
    }
    std::optional<ClusterDimension> cluster;
    if (sample.has_cluster()) {
        cluster = sample.cluster();
    }
    return PolyadicSample::build(2, std::move(labels), sample.variable_names(), std::move(obs), std::move(groups),
                                 std::move(cluster));
}

PolyadicSample pigeonhole_dgp_resample(const PolyadicSample& sample, std::uint64_t seed, std::uint64_t r) {
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const auto counts = draw_pigeonhole_counts(sample.n_units(), seed, r, StreamRole::dgp_resample,
                                                   static_cast<std::uint64_t>(attempt));
        try {
            return pigeonhole_replicate(sample, counts.values);
        } catch (const DegenerateDraw&) {
            continue;
        }
    }
    throw DgpError("pigeonhole DGP: " + std::to_string(kMaxAttempts) + " degenerate draws in a row");
}

std::string method_name(CoverageMethod m) {
    switch (m) {
        case CoverageMethod::bayes:
            return "bayes";
        case CoverageMethod::pigeonhole:
            return "pigeonhole";
        case CoverageMethod::naive:
            return "naive";
        case CoverageMethod::graham:
            return "graham";
    }
    return "unknown";
}

CoverageMethod parse_method(const std::string& name) {
    if (name == "bayes") {
        return CoverageMethod::bayes;
    }
    if (name == "pigeonhole") {
        return CoverageMethod::pigeonhole;
    }
    if (name == "naive") {
        return CoverageMethod::naive;
    }
    if (name == "graham") {
        return CoverageMethod::graham;
    }
    throw ConfigError("unknown coverage method '" + name + "' (expected bayes, pigeonhole, naive or graham)");
}

bool interval_covers(double lower, double upper, double truth) {
    const double slack = 1e-9 * (1.0 + std::abs(truth));
    return lower - slack <= truth && truth <= upper + slack;
}

namespace {

struct MethodOutcome {
    enum class Status { ok, failed, skipped } status = Status::failed;
    std::string reason;
    Vector lower;
    Vector upper;
};

struct ReplicationOutcome {
    bool data_ok = false;
    ParamVector estimate;
    std::vector<MethodOutcome> methods;
};

MethodOutcome run_method(CoverageMethod method, const Estimator& est, const ParamVector& theta,
                         const CoverageConfig& cfg, std::uint64_t r, std::size_t slot) {
    MethodOutcome out;
    try {
        if (method == CoverageMethod::bayes || method == CoverageMethod::pigeonhole) {
            BootstrapOptions o;
            o.scheme = method == CoverageMethod::bayes ? Scheme::bayes : Scheme::pigeonhole;
            o.draws = cfg.draws;
            o.seed = derive_key(cfg.seed, r, StreamRole::replication, slot);
            o.threads = 1;
            const auto res = run_bootstrap(est, o);
            const auto ci = credible_interval(res, cfg.level);
            out.lower = ci.lower;
            out.upper = ci.upper;
        } else {
            const auto z = est.z_system(theta);
            const auto full = method == CoverageMethod::graham ? graham_variance(z.moment, est.sample(), z.point)
                                                               : naive_dyad_robust(z.moment, est.sample(), z.point);
            const auto v = select_parameters(full, z.theta_index);
            const Vector half = normal_quantile(0.5 + cfg.level / 2.0) * v.se();
            out.lower = theta - half;
            out.upper = theta + half;
        }
        out.status = MethodOutcome::Status::ok;
    } catch (const Unsupported& e) {
        out.status = MethodOutcome::Status::skipped;
        out.reason = e.what();
    } catch (const Error& e) {
        out.status = MethodOutcome::Status::failed;
        out.reason = e.what();
    }
    return out;
}

ParamVector reference_truth(const CoverageConfig& cfg) {
    if (cfg.truth) {
        return *cfg.truth;
    }
    if (cfg.source == CoverageConfig::Source::pigeonhole_of) {
        return Estimator::bind(cfg.spec, *cfg.sample).estimate(uniform_weights(*cfg.sample));
    }
    SyntheticDGP big = *cfg.dgp;
    big.n = 1001;  // 1001 * 1000 ordered pairs
    const auto ref = generate_synthetic(big, cfg.seed, std::numeric_limits<std::uint64_t>::max());
    return Estimator::bind(cfg.spec, ref).estimate(uniform_weights(ref));
}

}  // namespace

CoverageReport run_coverage(const CoverageConfig& cfg) {
    if (cfg.replications < 1) {
        throw ParamError("coverage needs at least one replication");
    }
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
        throw ParamError("level must lie strictly between 0 and 1");
    }
    if (cfg.source == CoverageConfig::Source::synthetic && !cfg.dgp) {
        throw ConfigError("synthetic coverage needs a DGP");
    }
    if (cfg.source == CoverageConfig::Source::pigeonhole_of && !cfg.sample) {
        throw ConfigError("pigeonhole coverage needs a source sample");
    }
    if (cfg.methods.empty()) {
        throw ConfigError("coverage needs at least one method");
    }

    CoverageReport rep;
    rep.level = cfg.level;
    rep.replications = cfg.replications;
    rep.draws = cfg.draws;
    rep.seed = cfg.seed;
    rep.source = cfg.source == CoverageConfig::Source::synthetic ? "synthetic:" + cfg.dgp->name : "pigeonhole-of";
    rep.truth = reference_truth(cfg);

    const std::size_t R = cfg.replications;
    std::vector<ReplicationOutcome> outcomes(R);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(R, cfg.threads, [&](std::size_t r) {
        ReplicationOutcome& oc = outcomes[r];
        try {
            const PolyadicSample data = cfg.source == CoverageConfig::Source::synthetic
                                            ? generate_synthetic(*cfg.dgp, cfg.seed, r)
                                            : pigeonhole_dgp_resample(*cfg.sample, cfg.seed, r);
            const Estimator est = Estimator::bind(cfg.spec, data);
            oc.estimate = est.estimate(uniform_weights(data));
            oc.data_ok = true;
            for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
                oc.methods.push_back(run_method(cfg.methods[m], est, oc.estimate, cfg, r, m));
            }
        } catch (const Error&) {
            oc.data_ok = false;
        }
        const std::size_t d = ++done;
        if (cfg.progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            cfg.progress(d, R);
        }
    });

    const auto K = rep.truth.size();
    rep.param_names = Estimator::bind(cfg.spec, cfg.source == CoverageConfig::Source::synthetic
                                                    ? generate_synthetic(*cfg.dgp, cfg.seed, 0)
                                                    : *cfg.sample)
                          .param_names();
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        MethodCoverage mc;
        mc.method = cfg.methods[m];
        Vector covered = Vector::Zero(K);
        Vector width = Vector::Zero(K);
        for (const auto& oc : outcomes) {
            if (!oc.data_ok) {
                continue;
            }
            const auto& mo = oc.methods[m];
            if (mo.status == MethodOutcome::Status::skipped) {
                ++mc.skipped;
                if (mc.skip_reason.empty()) {
                    mc.skip_reason = mo.reason;
                }
                continue;
            }
            if (mo.status == MethodOutcome::Status::failed) {
                ++mc.failures;
                ++mc.failure_reasons[mo.reason];
                continue;
            }
            ++mc.evaluated;
            for (Eigen::Index k = 0; k < K; ++k) {
                covered[k] += interval_covers(mo.lower[k], mo.upper[k], rep.truth[k]) ? 1.0 : 0.0;
                width[k] += mo.upper[k] - mo.lower[k];
            }
        }
        if (mc.evaluated > 0) {
            mc.coverage = covered / static_cast<double>(mc.evaluated);
            mc.mean_width = width / static_cast<double>(mc.evaluated);
        } else {
            mc.coverage = Vector::Constant(K, std::numeric_limits<double>::quiet_NaN());
            mc.mean_width = Vector::Constant(K, std::numeric_limits<double>::quiet_NaN());
        }
        rep.methods.push_back(std::move(mc));
    }
    for (const auto& oc : outcomes) {
        if (!oc.data_ok) {
            ++rep.data_failures;
        }
    }
    rep.mean_estimate = Vector::Zero(K);
    std::size_t ok = 0;
    for (const auto& oc : outcomes) {
        if (oc.data_ok) {
            rep.mean_estimate += oc.estimate;
            ++ok;
        }
    }
    if (ok > 0) {
        rep.mean_estimate /= static_cast<double>(ok);
    }
    rep.estimate_sd = Vector::Zero(K);
    if (ok > 1) {
        for (const auto& oc : outcomes) {
            if (oc.data_ok) {
                rep.estimate_sd += (oc.estimate - rep.mean_estimate).cwiseAbs2();
            }
        }
        rep.estimate_sd = (rep.estimate_sd / static_cast<double>(ok - 1)).cwiseSqrt();
    }
    return rep;
}

}  // namespace polyboot
