#include "polyboot/counterfactual.hpp"

#include "polyboot/errors.hpp"
#include "polyboot/moments.hpp"
#include "polyboot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polyboot {

CounterfactualFn identity_counterfactual(const std::vector<std::string>& param_names) {
    CounterfactualFn g;
    g.name = "identity";
    g.arity = param_names.size();
    g.output_names = param_names;
    g.eval = [](const PolyadicSample&, const ParamVector& theta) { return Vector(theta); };
    return g;
}

CounterfactualFn toy_growth(const PolyadicSample& sample, const std::string& column, std::size_t param) {
    const auto c = sample.column_index(column);
    CounterfactualFn g;
    g.name = "toy-growth";
    g.arity = 1;
    g.output_names = {"growth(" + column + ")"};
    g.eval = [c, param](const PolyadicSample& s, const ParamVector& theta) {
        if (param >= static_cast<std::size_t>(theta.size())) {
            throw ParamError("toy-growth parameter index out of range");
        }
        double mean = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            mean += s.value(i, c);
        }
        mean /= static_cast<double>(s.size());
        Vector out(1);
        out[0] = std::exp(theta[static_cast<Eigen::Index>(param)] * mean);
        return out;
    };
    return g;
}

CounterfactualRegistry CounterfactualRegistry::with_builtins() {
    CounterfactualRegistry r;
    r.add("identity", [](const PolyadicSample&, const std::vector<std::string>& names, const std::string&) {
        return identity_counterfactual(names);
    });
    r.add("toy-growth", [](const PolyadicSample& sample, const std::vector<std::string>& names,
                           const std::string& args) {
        const auto colon = args.find(':');
        const std::string column = args.substr(0, colon);
        if (column.empty()) {
            throw ConfigError("toy-growth needs a column: toy-growth:<column>[:<param>]");
        }
        std::size_t param = 0;
        if (colon != std::string::npos) {
            const std::string pname = args.substr(colon + 1);
            const auto it = std::find(names.begin(), names.end(), pname);
            if (it == names.end()) {
                throw ConfigError("toy-growth: unknown parameter '" + pname + "'");
            }
            param = static_cast<std::size_t>(it - names.begin());
        } else {
            const auto it = std::find_if(names.begin(), names.end(),
                                         [](const std::string& n) { return n != kInterceptName; });
            if (it == names.end()) {
                throw ConfigError("toy-growth needs a non-intercept parameter");
            }
            param = static_cast<std::size_t>(it - names.begin());
        }
        return toy_growth(sample, column, param);
    });
    return r;
}

void CounterfactualRegistry::add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }

std::vector<std::string> CounterfactualRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) {
        out.push_back(name);
    }
    return out;
}

CounterfactualFn CounterfactualRegistry::make(const std::string& spec, const PolyadicSample& sample,
                                              const std::vector<std::string>& param_names) const {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto it = factories_.find(name);
    if (it == factories_.end()) {
        throw ConfigError("unknown counterfactual '" + name + "'");
    }
    return it->second(sample, param_names, args);
}

PredictionDraws propagate(const PolyadicSample& sample, const BootstrapResult& result, const CounterfactualFn& g,
                          unsigned threads) {
    PredictionDraws out;
    out.name = g.name;
    out.output_names = g.output_names;
    out.source_method = result.method;
    try {
        out.point = g.eval(sample, result.point_estimate);
    } catch (const std::exception& e) {
        throw CounterfactualError("counterfactual '" + g.name + "' fails at the point estimate: " + e.what());
    }
    if (!out.point.allFinite()) {
        throw CounterfactualError("counterfactual '" + g.name + "' is not finite at the point estimate");
    }
    const auto m = out.point.size();
    const auto B = static_cast<std::size_t>(result.draws.rows());
    Matrix all(static_cast<Eigen::Index>(B), m);
    std::vector<char> ok(B, 0);
    parallel_for(B, threads, [&](std::size_t b) {
        try {
            const Vector v = g.eval(sample, result.draws.row(static_cast<Eigen::Index>(b)).transpose());
            if (v.size() == m && v.allFinite()) {
                all.row(static_cast<Eigen::Index>(b)) = v.transpose();
                ok[b] = 1;
            }
        } catch (const std::exception&) {
            // dropped and counted below
        }
    });
    const auto kept = static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), 1));
    out.draws.resize(kept, m);
    Eigen::Index r = 0;
    for (std::size_t b = 0; b < B; ++b) {
        if (ok[b]) {
            out.draws.row(r++) = all.row(static_cast<Eigen::Index>(b));
            out.draw_indices.push_back(b < result.draw_indices.size() ? result.draw_indices[b] : b);
        }
    }
    out.dropped = B - static_cast<std::size_t>(kept);
    return out;
}

CounterfactualSummary summarize(const PredictionDraws& preds, double level, const std::vector<double>& thresholds) {
    if (preds.draws.rows() == 0) {
        throw ParamError("no counterfactual draws to summarize");
    }
    const CredibleInterval ci = credible_interval(preds.draws, level);
    CounterfactualSummary s;
    s.level = level;
    s.draws = static_cast<std::size_t>(preds.draws.rows());
    s.dropped = preds.dropped;
    const double B = static_cast<double>(preds.draws.rows());
    for (Eigen::Index j = 0; j < preds.draws.cols(); ++j) {
        OutputSummary o;
        o.name = static_cast<std::size_t>(j) < preds.output_names.size() ? preds.output_names[j]
                                                                           : "output[" + std::to_string(j) + "]";
        o.point = preds.point.size() > j ? preds.point[j] : 0.0;
        o.lower = ci.lower[j];
        o.upper = ci.upper[j];
        const Vector col = preds.draws.col(j);
        o.mean = col.mean();
        const Eigen::ArrayXd dev = col.array() - o.mean;
        const double m2 = dev.square().mean();
        const double m3 = dev.cube().mean();
        o.sd = std::sqrt(m2);
        o.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
        for (const double t : thresholds) {
            Exceedance e;
            e.threshold = t;
            e.probability = static_cast<double>((col.array() > t).count()) / B;
            e.mc_se = std::sqrt(e.probability * (1.0 - e.probability) / B);
            o.exceedance.push_back(e);
        }
        s.outputs.push_back(std::move(o));
    }
    return s;
}

double ranking_stability(const PredictionDraws& preds) {
    if (preds.draws.rows() == 0) {
        throw ParamError("no counterfactual draws");
    }
    const auto m = static_cast<std::size_t>(preds.point.size());
    auto order_of = [m](const Vector& v) {
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        return idx;
    };
    const auto ref = order_of(preds.point);
    std::size_t same = 0;
    for (Eigen::Index r = 0; r < preds.draws.rows(); ++r) {
        if (order_of(preds.draws.row(r).transpose()) == ref) {
            ++same;
        }
    }
    return static_cast<double>(same) / static_cast<double>(preds.draws.rows());
}

}  // namespace polyboot
