#pragma once

// Small deterministic RNG helpers shared by the fold planner, the permutation
// test and the synthetic generator.

#include <cstdint>
#include <string_view>

namespace antic {

// SplitMix64 step. Good enough to seed streams and draw sign bits.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Seed for substream `index` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 a(seed ^ 0x5851F42D4C957F2DULL);
    const std::uint64_t s = a();
    SplitMix64 b(s + index * 0xD1B54A32D192ED03ULL);
    return b();
}

// 64-bit FNV-1a; stable across platforms.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace antic
