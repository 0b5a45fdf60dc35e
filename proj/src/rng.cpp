#include "polyboot/rng.hpp"

#include <cmath>
#include <numbers>

namespace polyboot {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index, StreamRole role,
                         std::uint64_t sub) noexcept {
    std::uint64_t h = mix64(seed + kGolden);
    h = mix64(h ^ (index + 0x632BE59BD9B4E019ULL));
    h = mix64(h ^ (static_cast<std::uint64_t>(role) * 0xD6E8FEB86659FD93ULL));
    h = mix64(h ^ (sub + 0xA0761D6478BD642FULL));
    return h;
}

Stream::result_type Stream::operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Stream::uniform() noexcept {
    // 53 random mantissa bits, shifted by half an ulp so 0 and 1 are excluded.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::exponential() noexcept { return -std::log(uniform()); }

double Stream::normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Stream::log_gamma(double shape) noexcept {
    if (shape < 1.0) {
        // Ga(a) = Ga(a + 1) * U^(1/a)
        const double boost = std::log(uniform()) / shape;
        return log_gamma(shape + 1.0) + boost;
    }
    // Marsaglia & Tsang (2000).
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2 ||
            std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return std::log(d) + std::log(v);
        }
    }
}

std::uint64_t Stream::below(std::uint64_t bound) noexcept {
    // Rejection sampling on the top of the range for an unbiased result.
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = (*this)();
    while (x >= limit) {
        x = (*this)();
    }
    return x % bound;
}

}  // namespace polyboot
