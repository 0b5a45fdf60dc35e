#include "polyboot/report.hpp"

#include "polyboot/csv_io.hpp"

#include <cmath>
#include <ostream>

namespace polyboot {

Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

Json to_json(const Matrix& m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        a.push_back(to_json(Vector(m.row(r).transpose())));
    }
    return a;
}

namespace {

Json reasons_json(const std::map<std::string, std::size_t>& reasons) {
    Json j = Json::object();
    for (const auto& [why, count] : reasons) {
        j[why] = count;
    }
    return j;
}

std::string level_key(double level) { return format_double(level); }

}  // namespace

Json bootstrap_report(const BootstrapResult& result, const BootstrapReportOptions& options) {
    Json j;
    j["method"] = result.method;
    j["seed"] = result.seed;
    j["B"] = result.B;
    j["failed"] = result.failed;
    j["failure_reasons"] = reasons_json(result.failure_reasons);
    j["param_names"] = result.param_names;
    j["point_estimate"] = to_json(result.point_estimate);

    Json q = Json::object();
    if (result.successful() >= 2) {
        for (const double level : options.levels) {
            const auto ci = credible_interval(result, level);
            q[level_key(level)] = {{"lower", to_json(ci.lower)}, {"upper", to_json(ci.upper)}};
        }
    }
    j["quantiles"] = q;

    const Matrix& D = result.draws;
    Json diag;
    diag["successful"] = result.successful();
    std::size_t zero_draws = 0;
    std::size_t floor_draws = 0;
    std::size_t ridged_draws = 0;
    for (const auto& rec : result.records) {
        zero_draws += rec.zero_weight > 0 ? 1 : 0;
        floor_draws += rec.ok && rec.precision_floor ? 1 : 0;
        ridged_draws += rec.ok && rec.ridged ? 1 : 0;
    }
    diag["draws_with_zero_weight_observations"] = zero_draws;
    diag["precision_floor_draws"] = floor_draws;
    diag["ridged_weight_matrix_draws"] = ridged_draws;
    if (D.rows() > 0) {
        const Vector mean = D.colwise().mean().transpose();
        Vector sd = Vector::Zero(D.cols());
        if (D.rows() > 1) {
            sd = ((D.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<double>(D.rows() - 1))
                     .transpose()
                     .cwiseSqrt();
        }
        Json outliers = Json::array();
        for (Eigen::Index k = 0; k < D.cols(); ++k) {
            std::size_t c = 0;
            for (Eigen::Index r = 0; r < D.rows(); ++r) {
                c += sd[k] > 0.0 && std::abs(D(r, k) - mean[k]) > 10.0 * sd[k] ? 1 : 0;
            }
            outliers.push_back(c);
        }
        diag["mean"] = to_json(mean);
        diag["sd"] = to_json(sd);
        diag["beyond_10_sd"] = outliers;
    }
    j["diagnostics"] = diag;

    Json hist = Json::array();
    if (options.histogram_bins > 0 && D.rows() > 0) {
        for (Eigen::Index k = 0; k < D.cols(); ++k) {
            const std::vector<double> col(D.col(k).data(), D.col(k).data() + D.rows());
            const auto h = histogram(col, options.histogram_bins);
            hist.push_back({{"parameter", result.param_names[static_cast<std::size_t>(k)]},
                            {"edges", h.edges},
                            {"counts", h.counts}});
        }
    }
    j["histogram"] = hist;
    if (options.emit_draws) {
        j["draw_indices"] = result.draw_indices;
        j["draws"] = to_json(D);
    }
    return j;
}

Json variance_report(const VarianceEstimate& v, const std::vector<std::string>& param_names) {
    Json j;
    j["method"] = v.method;
    j["param_names"] = param_names;
    j["covariance"] = to_json(v.covariance);
    j["se"] = to_json(v.se());
    j["clamped"] = v.clamped;
    j["components"] = {{"sigma1", to_json(v.sigma1)}, {"sigma2", to_json(v.sigma2)}, {"sigma3", to_json(v.sigma3)}};
    return j;
}

Json counterfactual_report(const PredictionDraws& preds, const CounterfactualSummary& summary, bool emit_draws) {
    Json j;
    j["counterfactual"] = preds.name;
    j["source_method"] = preds.source_method;
    j["output_names"] = preds.output_names;
    j["point"] = to_json(preds.point);
    j["draws_used"] = summary.draws;
    j["dropped"] = summary.dropped;
    j["level"] = summary.level;
    Json outs = Json::array();
    for (const auto& o : summary.outputs) {
        Json e = Json::array();
        for (const auto& x : o.exceedance) {
            e.push_back({{"threshold", x.threshold}, {"probability", x.probability}, {"mc_se", x.mc_se}});
        }
        outs.push_back({{"name", o.name},
                        {"point", o.point},
                        {"lower", o.lower},
                        {"upper", o.upper},
                        {"mean", o.mean},
                        {"sd", o.sd},
                        {"skewness", o.skewness},
                        {"exceedance", e}});
    }
    j["outputs"] = outs;
    if (preds.point.size() > 1 && preds.draws.rows() > 0) {
        j["ranking_stability"] = ranking_stability(preds);
    }
    if (emit_draws) {
        j["draw_indices"] = preds.draw_indices;
        j["draws"] = to_json(preds.draws);
    }
    return j;
}

Json coverage_report(const CoverageReport& r) {
    Json j;
    j["source"] = r.source;
    j["level"] = r.level;
    j["replications"] = r.replications;
    j["draws"] = r.draws;
    j["seed"] = r.seed;
    j["param_names"] = r.param_names;
    j["truth"] = to_json(r.truth);
    j["data_failures"] = r.data_failures;
    j["mean_estimate"] = to_json(r.mean_estimate);
    j["estimate_sd"] = to_json(r.estimate_sd);
    Json ms = Json::array();
    for (const auto& m : r.methods) {
        Json e;
        e["method"] = method_name(m.method);
        e["evaluated"] = m.evaluated;
        e["failures"] = m.failures;
        e["failure_reasons"] = reasons_json(m.failure_reasons);
        e["skipped"] = m.skipped;
        if (!m.skip_reason.empty()) {
            e["skip_reason"] = m.skip_reason;
        }
        e["coverage"] = to_json(m.coverage);
        e["mean_width"] = to_json(m.mean_width);
        ms.push_back(e);
    }
    j["methods"] = ms;
    return j;
}

Json atoms_report(const DiscreteAtomSet& atoms, const PolyadicSample& sample) {
    Json a = Json::array();
    for (const auto& atom : atoms.atoms) {
        a.push_back({{"pair", {sample.unit_labels()[atom.first], sample.unit_labels()[atom.second]}},
                     {"both_directions", atom.both_directions},
                     {"location", to_json(atom.location)},
                     {"mass", atom.mass}});
    }
    Json j;
    j["atoms"] = a;
    return j;
}

void bootstrap_csv(const BootstrapResult& result, const std::vector<double>& levels, std::ostream& out) {
    out << "parameter,point_estimate,level,lower,upper\n";
    for (const double level : levels) {
        const auto ci = credible_interval(result, level);
        for (std::size_t k = 0; k < result.param_names.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            out << result.param_names[k] << ',' << format_double(result.point_estimate[e]) << ','
                << format_double(level) << ',' << format_double(ci.lower[e]) << ',' << format_double(ci.upper[e])
                << '\n';
        }
    }
}

void coverage_csv(const CoverageReport& r, std::ostream& out) {
    out << "method,parameter,truth,coverage,mean_width,evaluated,failures,skipped\n";
    for (const auto& m : r.methods) {
        for (std::size_t k = 0; k < r.param_names.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            out << method_name(m.method) << ',' << r.param_names[k] << ',' << format_double(r.truth[e]) << ','
                << format_double(m.coverage[e]) << ',' << format_double(m.mean_width[e]) << ',' << m.evaluated
                << ',' << m.failures << ',' << m.skipped << '\n';
        }
    }
}

}  // namespace polyboot
