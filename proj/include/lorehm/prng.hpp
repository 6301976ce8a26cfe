#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace lorehm {

// SplitMix64 (Steele, Lea, Flood 2014). Used for every seeded choice in the
// engine so that sampled reference sets and synthetic corpora are identical
// across compilers and standard libraries.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Independent child stream keyed by `stream`.
    constexpr SplitMix64 split(std::uint64_t stream) const noexcept {
        SplitMix64 mixer(state_ ^ (stream * 0xD1B54A32D192ED03ULL));
        return SplitMix64(mixer.next());
    }

    // Uniform integer in [0, bound) by rejection; bound > 0.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next();
        while (x >= limit) {
            x = next();
        }
        return x % bound;
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller.
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace lorehm
