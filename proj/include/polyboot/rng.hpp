#pragma once

#include <cstdint>
#include <limits>

namespace polyboot {

/// Purpose tag mixed into every substream key so that different consumers of
/// the same (seed, index) pair never share random numbers.
enum class StreamRole : std::uint64_t {
    unit_weights = 1,
    cluster_weights = 2,
    group_weights = 3,
    pigeonhole_units = 4,
    dgp_latent = 5,
    dgp_noise = 6,
    dgp_resample = 7,
    replication = 8,
    fixture = 9,
};

/// Mixes the four key components into one 64-bit stream key.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index, StreamRole role,
                         std::uint64_t sub = 0) noexcept;

/// Counter-based random stream. The k-th output is a pure function of
/// (key, k), so a stream can be reconstructed anywhere from its key alone.
/// All variate transforms are implemented here rather than through
/// <random> distributions, whose algorithms differ between standard libraries.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key) noexcept : key_(key) {}
    Stream(std::uint64_t seed, std::uint64_t index, StreamRole role, std::uint64_t sub = 0) noexcept
        : key_(derive_key(seed, index, role, sub)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    /// Exp(1) by inversion.
    double exponential() noexcept;
    /// Standard normal (Box-Muller, one variate per two uniforms).
    double normal() noexcept;
    /// Log of a Gamma(shape, 1) variate; stays finite for shapes where the
    /// variate itself underflows.
    double log_gamma(double shape) noexcept;
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace polyboot
