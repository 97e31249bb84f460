#pragma once

#include <cstdint>
#include <string_view>

#include "evalcomp/util.hpp"

namespace evalcomp {

// Deterministic PRNG with a fixed algorithm (xoshiro256**) so pipeline
// artifacts are byte-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // seed expansion via splitmix64
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x += 0x9E3779B97f4A7C15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            w = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform integer in [0, n); unbiased via rejection. n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

// Every stage draws randomness from an Rng derived from the run seed and a
// stable string key, so adding or removing records never perturbs others.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    return seed ^ fnv1a64(key);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view key,
                                 std::string_view purpose) {
    return seed ^ fnv1a64(key) ^ (fnv1a64(purpose) * 0x9E3779B97f4A7C15ull);
}

inline Rng derive_rng(std::uint64_t seed, std::string_view key) {
    return Rng(derive_seed(seed, key));
}

inline Rng derive_rng(std::uint64_t seed, std::string_view key, std::string_view purpose) {
    return Rng(derive_seed(seed, key, purpose));
}

}  // namespace evalcomp
