#pragma once

#include "polyboot/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace polyboot {

using UnitId = std::uint32_t;

/// One observed record, used when assembling a sample.
struct Observation {
    std::vector<UnitId> index;
    std::vector<double> variables;
    std::uint32_t cluster_level = 0;
};

/// Partition of the units into exchangeability groups.
struct GroupMap {
    std::vector<std::uint32_t> group_of_unit;
    std::vector<std::string> labels;
};

/// Additional clustering dimension (for example a year) with its own levels.
struct ClusterDimension {
    std::string name;
    std::vector<std::string> labels;
};

/// Observations indexed by P-tuples of distinct units, with named numeric
/// variables. The observed index set is whatever tuples are present; absent
/// tuples are missing. Immutable after construction.
class PolyadicSample {
public:
    /// Validates and assembles a sample. Throws DataError on any violated
    /// invariant (repeated unit in a tuple, out-of-range id, duplicate tuple,
    /// ragged or non-finite variables, empty index set).
    static PolyadicSample build(int order, std::vector<std::string> unit_labels,
                                std::vector<std::string> variable_names,
                                std::vector<Observation> observations,
                                std::optional<GroupMap> groups = std::nullopt,
                                std::optional<ClusterDimension> cluster = std::nullopt);

    int order() const noexcept { return order_; }
    std::size_t n_units() const noexcept { return unit_labels_.size(); }
    std::size_t size() const noexcept { return n_obs_; }
    std::size_t n_variables() const noexcept { return variable_names_.size(); }

    std::span<const UnitId> tuple(std::size_t obs) const noexcept {
        return {units_.data() + obs * static_cast<std::size_t>(order_),
                static_cast<std::size_t>(order_)};
    }
    std::span<const double> row(std::size_t obs) const noexcept {
        return {variables_.data() + obs * n_variables(), n_variables()};
    }
    double value(std::size_t obs, std::size_t column) const noexcept {
        return variables_[obs * n_variables() + column];
    }
    /// Copy of one variable column.
    Vector column(std::size_t column) const;
    /// Index of a named variable; DataError naming the column if absent.
    std::size_t column_index(std::string_view name) const;
    bool has_column(std::string_view name) const noexcept;

    const std::vector<std::string>& unit_labels() const noexcept { return unit_labels_; }
    const std::vector<std::string>& variable_names() const noexcept { return variable_names_; }

    bool has_groups() const noexcept { return groups_.has_value(); }
    const GroupMap& groups() const;
    bool has_cluster() const noexcept { return cluster_.has_value(); }
    const ClusterDimension& cluster() const;
    std::size_t n_cluster_levels() const noexcept { return cluster_ ? cluster_->labels.size() : 1; }
    std::uint32_t cluster_level(std::size_t obs) const noexcept {
        return cluster_ ? levels_[obs] : 0;
    }

    /// Observation index of a tuple (at a cluster level), if observed.
    std::optional<std::size_t> find(std::span<const UnitId> tuple, std::uint32_t level = 0) const;
    /// For dyads: index of the reverse-direction observation (l, k) at the same level.
    std::optional<std::size_t> reverse_of(std::size_t obs) const;

    /// Number of P-tuples of distinct units, n!/(n-P)!, per cluster level.
    std::size_t full_index_size() const noexcept;
    /// True when every P-tuple is observed at every cluster level.
    bool is_full_index_set() const noexcept {
        return n_obs_ == full_index_size() * n_cluster_levels();
    }
    /// Number of observations each unit appears in.
    std::vector<std::size_t> unit_incidence() const;

    /// Same data under the unit relabeling u -> permutation[u]; observation
    /// order, variables and cluster levels are unchanged.
    PolyadicSample relabeled(std::span<const UnitId> permutation) const;
    /// Sub-sample holding only the listed observations.
    PolyadicSample subset(std::span<const std::size_t> observations) const;

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::uint32_t>& key) const noexcept;
    };

    PolyadicSample() = default;
    std::vector<std::uint32_t> make_key(std::span<const UnitId> tuple, std::uint32_t level) const;

    int order_ = 2;
    std::size_t n_obs_ = 0;
    std::vector<std::string> unit_labels_;
    std::vector<std::string> variable_names_;
    std::vector<UnitId> units_;
    std::vector<double> variables_;
    std::vector<std::uint32_t> levels_;
    std::optional<GroupMap> groups_;
    std::optional<ClusterDimension> cluster_;
    std::unordered_map<std::vector<std::uint32_t>, std::size_t, KeyHash> lookup_;
};

/// Non-fatal data quality finding.
struct Diagnostic {
    enum class Kind { low_incidence_unit, zero_variance_column, empty_group, empty_cluster_level };
    Kind kind;
    std::string message;
};

/// Warnings for units in fewer than two tuples, constant columns and empty
/// group or cluster levels. Never throws.
std::vector<Diagnostic> validate(const PolyadicSample& sample);

/// Normalized weight per observed tuple, aligned with the sample's rows.
struct ObservationWeights {
    enum class Scheme { uniform, bayes, pigeonhole, prior, custom };
    Vector values;
    Scheme scheme = Scheme::custom;
};

ObservationWeights uniform_weights(const PolyadicSample& sample);

/// A sample together with the weights that define a (weighted) empirical
/// distribution over its observations.
struct EmpiricalDistribution {
    const PolyadicSample* sample = nullptr;
    ObservationWeights weights;

    explicit EmpiricalDistribution(const PolyadicSample& s);
    EmpiricalDistribution(const PolyadicSample& s, ObservationWeights w);
};

}  // namespace polyboot
