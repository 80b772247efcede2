#pragma once

// Counter-based pseudorandom numbers: output depends only on (seed, stream,
// counter), so per-sample draws are independent of thread scheduling.

#include <cstdint>

namespace sofent {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::uint64_t bits(std::uint64_t counter) const {
        std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ull);
        h = mix64(h ^ stream * 0x9E3779B97F4A7C15ull);
        return mix64(h ^ counter * 0xC2B2AE3D27D4EB4Full);
    }
    // uniform in [0,1)
    double uniform(std::uint64_t counter) const {
        return double(bits(counter) >> 11) * 0x1.0p-53;
    }
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
        return bits(counter) % n;
    }
};

}  // namespace sofent
