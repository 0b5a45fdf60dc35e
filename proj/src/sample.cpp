#include "polyboot/sample.hpp"

#include "polyboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace polyboot {

std::size_t PolyadicSample::KeyHash::operator()(const std::vector<std::uint32_t>& key) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (const auto v : key) {
        h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

std::vector<std::uint32_t> PolyadicSample::make_key(std::span<const UnitId> tuple,
                                                    std::uint32_t level) const {
    std::vector<std::uint32_t> key(tuple.begin(), tuple.end());
    key.push_back(level);
    return key;
}

PolyadicSample PolyadicSample::build(int order, std::vector<std::string> unit_labels,
                                     std::vector<std::string> variable_names,
                                     std::vector<Observation> observations,
                                     std::optional<GroupMap> groups,
                                     std::optional<ClusterDimension> cluster) {
    if (order < 2) {
        throw DataError("tuple order must be at least 2, got " + std::to_string(order));
    }
    if (unit_labels.size() < static_cast<std::size_t>(order) || unit_labels.size() < 2) {
        throw DataError("need at least " + std::to_string(std::max(order, 2)) + " units, got " +
                        std::to_string(unit_labels.size()));
    }
    {
        auto sorted = unit_labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw DataError("unit labels must be distinct");
        }
    }
    if (observations.empty()) {
        throw DataError("observed index set is empty");
    }

    PolyadicSample s;
    s.order_ = order;
    s.n_obs_ = observations.size();
    s.unit_labels_ = std::move(unit_labels);
    s.variable_names_ = std::move(variable_names);
    const std::size_t n = s.unit_labels_.size();
    const std::size_t p = static_cast<std::size_t>(order);
    const std::size_t v = s.variable_names_.size();

    if (groups) {
        if (groups->group_of_unit.size() != n) {
            throw DataError("group map must assign every unit");
        }
        for (const auto g : groups->group_of_unit) {
            if (g >= groups->labels.size()) {
                throw DataError("group id out of range");
            }
        }
    }
    if (cluster && cluster->labels.empty()) {
        throw DataError("cluster dimension '" + cluster->name + "' has no levels");
    }

    s.units_.reserve(s.n_obs_ * p);
    s.variables_.reserve(s.n_obs_ * v);
    if (cluster) {
        s.levels_.reserve(s.n_obs_);
    }
    s.lookup_.reserve(s.n_obs_);

    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& obs = observations[i];
        if (obs.index.size() != p) {
            throw DataError("observation " + std::to_string(i) + " has a tuple of length " +
                            std::to_string(obs.index.size()) + ", expected " + std::to_string(p));
        }
        for (std::size_t a = 0; a < p; ++a) {
            if (obs.index[a] >= n) {
                throw DataError("observation " + std::to_string(i) + " references unknown unit id " +
                                std::to_string(obs.index[a]));
            }
            for (std::size_t b = 0; b < a; ++b) {
                if (obs.index[a] == obs.index[b]) {
                    throw DataError("observation " + std::to_string(i) + " repeats unit '" +
                                    s.unit_labels_[obs.index[a]] + "' within its tuple");
                }
            }
        }
        if (obs.variables.size() != v) {
            throw DataError("observation " + std::to_string(i) + " has " +
                            std::to_string(obs.variables.size()) + " variables, expected " +
                            std::to_string(v));
        }
        for (std::size_t c = 0; c < v; ++c) {
            if (!std::isfinite(obs.variables[c])) {
                throw DataError("observation " + std::to_string(i) + " has a non-finite value in column '" +
                                s.variable_names_[c] + "'");
            }
        }
        std::uint32_t level = 0;
        if (cluster) {
            level = obs.cluster_level;
            if (level >= cluster->labels.size()) {
                throw DataError("observation " + std::to_string(i) + " has cluster level out of range");
            }
            s.levels_.push_back(level);
        }
        auto [it, inserted] = s.lookup_.emplace(s.make_key(obs.index, level), i);
        if (!inserted) {
            std::string label;
            for (std::size_t a = 0; a < p; ++a) {
                label += (a ? "," : "") + s.unit_labels_[obs.index[a]];
            }
            throw DataError("duplicate tuple (" + label + ")" +
                            (cluster ? " at level '" + cluster->labels[level] + "'" : std::string{}));
        }
        s.units_.insert(s.units_.end(), obs.index.begin(), obs.index.end());
        s.variables_.insert(s.variables_.end(), obs.variables.begin(), obs.variables.end());
    }
    s.groups_ = std::move(groups);
    s.cluster_ = std::move(cluster);
    return s;
}

Vector PolyadicSample::column(std::size_t col) const {
    Vector out(static_cast<Eigen::Index>(n_obs_));
    for (std::size_t i = 0; i < n_obs_; ++i) {
        out[static_cast<Eigen::Index>(i)] = value(i, col);
    }
    return out;
}

std::size_t PolyadicSample::column_index(std::string_view name) const {
    const auto it = std::find(variable_names_.begin(), variable_names_.end(), name);
    if (it == variable_names_.end()) {
        throw DataError("unknown column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - variable_names_.begin());
}

bool PolyadicSample::has_column(std::string_view name) const noexcept {
    return std::find(variable_names_.begin(), variable_names_.end(), name) != variable_names_.end();
}

const GroupMap& PolyadicSample::groups() const {
    if (!groups_) {
        throw ParamError("sample has no group map");
    }
    return *groups_;
}

const ClusterDimension& PolyadicSample::cluster() const {
    if (!cluster_) {
        throw ParamError("sample has no cluster dimension");
    }
    return *cluster_;
}

std::optional<std::size_t> PolyadicSample::find(std::span<const UnitId> tuple, std::uint32_t level) const {
    const auto it = lookup_.find(make_key(tuple, level));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> PolyadicSample::reverse_of(std::size_t obs) const {
    if (order_ != 2) {
        throw Unsupported("reverse direction is only defined for dyadic data");
    }
    const auto t = tuple(obs);
    const UnitId rev[2] = {t[1], t[0]};
    return find(rev, cluster_level(obs));
}

std::size_t PolyadicSample::full_index_size() const noexcept {
    std::size_t count = 1;
    const std::size_t n = n_units();
    for (int a = 0; a < order_; ++a) {
        count *= n - static_cast<std::size_t>(a);
    }
    return count;
}

std::vector<std::size_t> PolyadicSample::unit_incidence() const {
    std::vector<std::size_t> counts(n_units(), 0);
    for (const auto u : units_) {
        ++counts[u];
    }
    return counts;
}

PolyadicSample PolyadicSample::relabeled(std::span<const UnitId> permutation) const {
    const std::size_t n = n_units();
    if (permutation.size() != n) {
        throw ParamError("permutation length must equal the unit count");
    }
    std::vector<bool> seen(n, false);
    for (const auto u : permutation) {
        if (u >= n || seen[u]) {
            throw ParamError("relabeling is not a permutation");
        }
        seen[u] = true;
    }
    std::vector<std::string> labels(n);
    for (std::size_t u = 0; u < n; ++u) {
        labels[permutation[u]] = unit_labels_[u];
    }
    std::vector<Observation> obs(n_obs_);
    for (std::size_t i = 0; i < n_obs_; ++i) {
        for (const auto u : tuple(i)) {
            obs[i].index.push_back(permutation[u]);
        }
        const auto r = row(i);
        obs[i].variables.assign(r.begin(), r.end());
        obs[i].cluster_level = cluster_level(i);
    }
    std::optional<GroupMap> groups;
    if (groups_) {
        groups = GroupMap{std::vector<std::uint32_t>(n), groups_->labels};
        for (std::size_t u = 0; u < n; ++u) {
            groups->group_of_unit[permutation[u]] = groups_->group_of_unit[u];
        }
    }
    return build(order_, std::move(labels), variable_names_, std::move(obs), std::move(groups), cluster_);
}

PolyadicSample PolyadicSample::subset(std::span<const std::size_t> observations) const {
    std::vector<Observation> obs;
    obs.reserve(observations.size());
    for (const auto i : observations) {
        if (i >= n_obs_) {
            throw ParamError("subset index out of range");
        }
        Observation o;
        const auto t = tuple(i);
        o.index.assign(t.begin(), t.end());
        const auto r = row(i);
        o.variables.assign(r.begin(), r.end());
        o.cluster_level = cluster_level(i);
        obs.push_back(std::move(o));
    }
    return build(order_, unit_labels_, variable_names_, std::move(obs), groups_, cluster_);
}

std::vector<Diagnostic> validate(const PolyadicSample& sample) {
    std::vector<Diagnostic> out;
    const auto incidence = sample.unit_incidence();
    for (std::size_t u = 0; u < incidence.size(); ++u) {
        if (incidence[u] < 2) {
            out.push_back({Diagnostic::Kind::low_incidence_unit,
                           "low-incidence unit '" + sample.unit_labels()[u] + "' appears in " +
                               std::to_string(incidence[u]) + " tuple(s)"});
        }
    }
    for (std::size_t c = 0; c < sample.n_variables(); ++c) {
        const double first = sample.value(0, c);
        bool constant = true;
        for (std::size_t i = 1; i < sample.size() && constant; ++i) {
            constant = sample.value(i, c) == first;
        }
        if (constant) {
            out.push_back({Diagnostic::Kind::zero_variance_column,
                           "zero variance column '" + sample.variable_names()[c] + "'"});
        }
    }
    if (sample.has_groups()) {
        const auto& g = sample.groups();
        std::vector<std::size_t> sizes(g.labels.size(), 0);
        for (const auto id : g.group_of_unit) {
            ++sizes[id];
        }
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (sizes[k] == 0) {
                out.push_back({Diagnostic::Kind::empty_group, "empty group '" + g.labels[k] + "'"});
            }
        }
    }
    if (sample.has_cluster()) {
        std::vector<std::size_t> sizes(sample.n_cluster_levels(), 0);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            ++sizes[sample.cluster_level(i)];
        }
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (sizes[k] == 0) {
                out.push_back({Diagnostic::Kind::empty_cluster_level,
                               "empty cluster level '" + sample.cluster().labels[k] + "'"});
            }
        }
    }
    return out;
}

ObservationWeights uniform_weights(const PolyadicSample& sample) {
    const auto n = static_cast<Eigen::Index>(sample.size());
    return {Vector::Constant(n, 1.0 / static_cast<double>(n)), ObservationWeights::Scheme::uniform};
}

EmpiricalDistribution::EmpiricalDistribution(const PolyadicSample& s)
    : sample(&s), weights(uniform_weights(s)) {}

EmpiricalDistribution::EmpiricalDistribution(const PolyadicSample& s, ObservationWeights w)
    : sample(&s), weights(std::move(w)) {
    if (static_cast<std::size_t>(weights.values.size()) != s.size()) {
        throw ParamError("weights are not aligned with the sample");
    }
    if ((weights.values.array() < 0.0).any()) {
        throw ParamError("weights must be nonnegative");
    }
    if (std::abs(weights.values.sum() - 1.0) > 1e-10) {
        throw ParamError("weights must sum to one");
    }
}

}  // namespace polyboot
