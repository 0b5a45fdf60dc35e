#pragma once

#include "polyboot/rng.hpp"
#include "polyboot/sample.hpp"

#include <cstdint>
#include <vector>

namespace polyboot {

enum class DrawKind { exponential, gamma, pigeonhole };

/// One vector of unit-level random values from which observation weights are
/// built. For the continuous kinds `log_values` holds the exact logarithms;
/// `values` may underflow to zero for very small Gamma shapes, so weight
/// construction works from the logs.
struct UnitDraw {
    std::vector<double> values;
    std::vector<double> log_values;
    DrawKind kind = DrawKind::exponential;
    double shape = 1.0;
    std::uint64_t draw_index = 0;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return values.size(); }
};

/// Smallest Gamma shape used by draw_gamma_units; smaller alpha/n is clamped.
inline constexpr double kMinGammaShape = 1e-6;

/// n iid Exp(1) values from the substream keyed by (seed, b).
UnitDraw draw_exponential_units(std::size_t n, std::uint64_t seed, std::uint64_t b,
                                StreamRole role = StreamRole::unit_weights, std::uint64_t sub = 0);

/// n iid Gamma(alpha / n, 1) values. alpha = n gives Exp(1).
UnitDraw draw_gamma_units(std::size_t n, double alpha, std::uint64_t seed, std::uint64_t b,
                          StreamRole role = StreamRole::unit_weights, std::uint64_t sub = 0);

/// Multinomial counts of n uniform picks from n units; counts sum to n.
UnitDraw draw_pigeonhole_counts(std::size_t n, std::uint64_t seed, std::uint64_t b,
                                StreamRole role = StreamRole::pigeonhole_units, std::uint64_t sub = 0);

/// Weight of tuple k proportional to the product of its units' values,
/// normalized over the observed index set only.
ObservationWeights product_weights(const UnitDraw& units, const PolyadicSample& sample);

/// Product weights times a cluster-level draw (one value per level).
ObservationWeights multiway_weights(const UnitDraw& units, const UnitDraw& cluster_draw,
                                    const PolyadicSample& sample);

/// Units take their draw normalized within their group; tuples are weighted
/// by the product of those within-group shares. One draw per group, sized to
/// the group.
ObservationWeights grouped_product_weights(const std::vector<UnitDraw>& group_draws,
                                           const PolyadicSample& sample);

/// Sizes of each group in the sample's group map; ParamError on an empty group.
std::vector<std::size_t> group_sizes(const PolyadicSample& sample);

}  // namespace polyboot
