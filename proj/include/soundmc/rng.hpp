#pragma once

#include <cstdint>

namespace soundmc {

/// Counter-style pseudo-random stream (SplitMix64 core).
///
/// Substreams are derived from a (seed, index) pair, so run i of a batch
/// draws from the same stream no matter how runs are distributed over
/// workers. That makes every batch bit-reproducible for a fixed seed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t state) : state_(state) {}

    /// Stream for run `index` under master `seed`.
    static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
        return RandomStream(mix(seed + 0x9E3779B97F4A7C15ull * (index + 1)));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    // murmur3 finalizer; decorrelates adjacent (seed, index) pairs
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
        z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

}  // namespace soundmc
