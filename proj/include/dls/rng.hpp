#pragma once

#include <cstdint>

namespace dls {

// splitmix64: tiny seedable generator used for reproducible start-vector
// selection and dataset synthesis.
struct SplitMix64 {
    std::uint64_t state{0};

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [0, bound); bound > 0
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }
};

}  // namespace dls
