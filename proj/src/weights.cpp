#include "polyboot/weights.hpp"

#include "polyboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polyboot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_units(std::size_t n) {
    if (n < 1) {
        throw ParamError("unit draw needs at least one unit");
    }
}

/// Per-unit log values, including log(0) = -inf for zero counts.
std::vector<double> unit_logs(const UnitDraw& draw) {
    if (draw.kind != DrawKind::pigeonhole && draw.log_values.size() == draw.values.size()) {
        return draw.log_values;
    }
    std::vector<double> out(draw.values.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (draw.values[k] < 0.0) {
            throw ParamError("unit draw values must be nonnegative");
        }
        out[k] = draw.values[k] > 0.0 ? std::log(draw.values[k]) : kNegInf;
    }
    return out;
}

/// Exponentiates and normalizes per-observation log weights.
ObservationWeights normalize_logs(const Vector& log_w, ObservationWeights::Scheme scheme) {
    const double top = log_w.maxCoeff();
    if (!(top > kNegInf)) {
        throw DegenerateDraw("draw assigns zero weight to every observed tuple");
    }
    Vector w = (log_w.array() - top).exp().matrix();
    w /= w.sum();
    return {std::move(w), scheme};
}

ObservationWeights normalize_direct(Vector w, ObservationWeights::Scheme scheme) {
    const double total = w.sum();
    if (!(total > 0.0)) {
        throw DegenerateDraw("draw assigns zero weight to every observed tuple");
    }
    w /= total;
    return {std::move(w), scheme};
}

ObservationWeights::Scheme scheme_of(DrawKind kind) {
    switch (kind) {
        case DrawKind::exponential:
            return ObservationWeights::Scheme::bayes;
        case DrawKind::gamma:
            return ObservationWeights::Scheme::prior;
        case DrawKind::pigeonhole:
            return ObservationWeights::Scheme::pigeonhole;
    }
    return ObservationWeights::Scheme::custom;
}

ObservationWeights tuple_weights(const std::vector<double>& unit_log, const std::vector<double>* unit_value,
                                 const std::vector<double>* level_log, const std::vector<double>* level_value,
                                 const PolyadicSample& sample, DrawKind kind) {
    const auto n_obs = static_cast<Eigen::Index>(sample.size());
    if (kind == DrawKind::pigeonhole) {
        // Integer count products are exact in double precision.
        Vector w(n_obs);
        for (Eigen::Index i = 0; i < n_obs; ++i) {
            double prod = 1.0;
            for (const auto u : sample.tuple(static_cast<std::size_t>(i))) {
                prod *= (*unit_value)[u];
            }
            if (level_value) {
                prod *= (*level_value)[sample.cluster_level(static_cast<std::size_t>(i))];
            }
            w[i] = prod;
        }
        return normalize_direct(std::move(w), scheme_of(kind));
    }
    Vector lw(n_obs);
    for (Eigen::Index i = 0; i < n_obs; ++i) {
        double s = 0.0;
        for (const auto u : sample.tuple(static_cast<std::size_t>(i))) {
            s += unit_log[u];
        }
        if (level_log) {
            s += (*level_log)[sample.cluster_level(static_cast<std::size_t>(i))];
        }
        lw[i] = s;
    }
    return normalize_logs(lw, scheme_of(kind));
}

}  // namespace

UnitDraw draw_exponential_units(std::size_t n, std::uint64_t seed, std::uint64_t b, StreamRole role,
                                std::uint64_t sub) {
    require_units(n);
    Stream stream(seed, b, role, sub);
    UnitDraw d;
    d.kind = DrawKind::exponential;
    d.shape = 1.0;
    d.seed = seed;
    d.draw_index = b;
    d.values.resize(n);
    d.log_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        d.values[k] = stream.exponential();
        d.log_values[k] = std::log(d.values[k]);
    }
    return d;
}

UnitDraw draw_gamma_units(std::size_t n, double alpha, std::uint64_t seed, std::uint64_t b, StreamRole role,
                          std::uint64_t sub) {
    require_units(n);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ParamError("prior precision alpha must be positive and finite");
    }
    const double shape = std::max(alpha / static_cast<double>(n), kMinGammaShape);
    Stream stream(seed, b, role, sub);
    UnitDraw d;
    d.kind = DrawKind::gamma;
    d.shape = shape;
    d.seed = seed;
    d.draw_index = b;
    d.values.resize(n);
    d.log_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        d.log_values[k] = stream.log_gamma(shape);
        d.values[k] = std::exp(d.log_values[k]);
    }
    return d;
}

UnitDraw draw_pigeonhole_counts(std::size_t n, std::uint64_t seed, std::uint64_t b, StreamRole role,
                                std::uint64_t sub) {
    require_units(n);
    Stream stream(seed, b, role, sub);
    UnitDraw d;
    d.kind = DrawKind::pigeonhole;
    d.seed = seed;
    d.draw_index = b;
    d.values.assign(n, 0.0);
    for (std::size_t pick = 0; pick < n; ++pick) {
        d.values[stream.below(n)] += 1.0;
    }
    return d;
}

ObservationWeights product_weights(const UnitDraw& units, const PolyadicSample& sample) {
    if (units.size() != sample.n_units()) {
        throw ParamError("unit draw has " + std::to_string(units.size()) + " values for " +
                         std::to_string(sample.n_units()) + " units");
    }
    const auto logs = unit_logs(units);
    return tuple_weights(logs, &units.values, nullptr, nullptr, sample, units.kind);
}

ObservationWeights multiway_weights(const UnitDraw& units, const UnitDraw& cluster_draw,
                                    const PolyadicSample& sample) {
    if (units.size() != sample.n_units()) {
        throw ParamError("unit draw does not match the unit count");
    }
    if (cluster_draw.size() != sample.n_cluster_levels()) {
        throw ParamError("cluster draw has " + std::to_string(cluster_draw.size()) + " values for " +
                         std::to_string(sample.n_cluster_levels()) + " levels");
    }
    if ((units.kind == DrawKind::pigeonhole) != (cluster_draw.kind == DrawKind::pigeonhole)) {
        throw ParamError("unit and cluster draws must both be counts or both be continuous");
    }
    const auto logs = unit_logs(units);
    const auto level_logs = unit_logs(cluster_draw);
    return tuple_weights(logs, &units.values, &level_logs, &cluster_draw.values, sample, units.kind);
}

std::vector<std::size_t> group_sizes(const PolyadicSample& sample) {
    const auto& g = sample.groups();
    std::vector<std::size_t> sizes(g.labels.size(), 0);
    for (const auto id : g.group_of_unit) {
        ++sizes[id];
    }
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 0) {
            throw ParamError("group '" + g.labels[k] + "' has no units");
        }
    }
    return sizes;
}

ObservationWeights grouped_product_weights(const std::vector<UnitDraw>& group_draws,
                                           const PolyadicSample& sample) {
    const auto sizes = group_sizes(sample);
    if (group_draws.size() != sizes.size()) {
        throw ParamError("need one unit draw per group");
    }
    const auto kind = group_draws.front().kind;
    std::vector<std::vector<double>> logs;
    std::vector<double> log_norm(sizes.size());
    std::vector<double> total(sizes.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (group_draws[g].size() != sizes[g]) {
            throw ParamError("draw for group " + std::to_string(g) + " has the wrong size");
        }
        if (group_draws[g].kind != kind) {
            throw ParamError("group draws must share one kind");
        }
        logs.push_back(unit_logs(group_draws[g]));
        const double top = *std::max_element(logs.back().begin(), logs.back().end());
        double s = 0.0;
        for (const double l : logs.back()) {
            s += std::exp(l - top);
        }
        log_norm[g] = top + std::log(s);
        total[g] = 0.0;
        for (const double v : group_draws[g].values) {
            total[g] += v;
        }
    }
    const auto& map = sample.groups();
    std::vector<std::size_t> position(sizes.size(), 0);
    std::vector<double> unit_log(sample.n_units());
    std::vector<double> unit_value(sample.n_units());
    for (std::size_t u = 0; u < sample.n_units(); ++u) {
        const auto g = map.group_of_unit[u];
        const auto pos = position[g]++;
        unit_log[u] = logs[g][pos] - log_norm[g];
        unit_value[u] = total[g] > 0.0 ? group_draws[g].values[pos] / total[g] : 0.0;
    }
    return tuple_weights(unit_log, &unit_value, nullptr, nullptr, sample, kind);
}

}  // namespace polyboot
