#pragma once

#include <cstdint>

namespace homeostat {

// SplitMix64: tiny 64-bit generator with O(1) splitting. Every run derives
// disjoint named streams from the scenario seed, so adding a consumer to one
// stream never perturbs another.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1). 53-bit mantissa use keeps the mapping exact.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n == 0 is a caller bug; returns 0.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        return next_u64() % n; // modulo bias is irrelevant at desk scale
    }

    // Derive an independent stream. Mixing in a tag keeps sibling streams
    // disjoint even when split from the same parent state.
    SplitMix64 split(std::uint64_t tag) {
        return SplitMix64(next_u64() ^ (tag * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
    }

private:
    std::uint64_t state_;
};

} // namespace homeostat
