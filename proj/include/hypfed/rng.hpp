#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace hypfed {

// Deterministic, platform-independent PRNG. std::mt19937_64 would also be
// reproducible, but the std::uniform_* distributions are not pinned by the
// standard, so we keep the whole stack under our control: splitmix64 for
// state transitions and explicit conversions to doubles / bounded ints.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1): 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; the disc sampler needs eta = 1 (the boundary
    // radius) attainable and eta = 0 not.
    double uniform01_open_closed() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on (0, 2*pi].
    double uniform_angle() { return uniform01_open_closed() * 6.283185307179586476925286766559; }

    // Unbiased uniform integer in [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = bound * (~0ULL / bound);
        std::uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % bound;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }
};

// Stream derivation: independent sub-streams are obtained by hashing the
// master seed with a purpose tag and an index. Tags are arbitrary distinct
// constants; what matters is that (tag, index) pairs never collide.
namespace seed_tag {
inline constexpr std::uint64_t trial      = 0x747269616cULL;
inline constexpr std::uint64_t data       = 0x64617461ULL;
inline constexpr std::uint64_t split      = 0x73706c6974ULL;
inline constexpr std::uint64_t assign     = 0x61737369676eULL;
inline constexpr std::uint64_t label_flip = 0x666c6970ULL;
inline constexpr std::uint64_t masks      = 0x6d61736b73ULL;
inline constexpr std::uint64_t order      = 0x6f72646572ULL;
inline constexpr std::uint64_t kmeans     = 0x6b6d65616e73ULL;
} // namespace seed_tag

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    SplitMix64 mix(master ^ (tag * 0x9E3779B97F4A7C15ULL));
    mix.next();
    mix.state ^= index * 0xD1B54A32D192ED03ULL;
    return mix.next();
}

} // namespace hypfed
