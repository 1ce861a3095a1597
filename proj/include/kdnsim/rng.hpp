#pragma once

#include <cstdint>

namespace kdnsim {

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so runs reproduce bit-for-bit across platforms; std:: distributions
// are implementation-defined and must not leak into simulation state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, bound). bound must be > 0.
    std::uint32_t next_below(std::uint32_t bound) {
        const std::uint64_t threshold = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
        std::uint64_t v = next_u64();
        while (v >= threshold) v = next_u64();
        return static_cast<std::uint32_t>(v % bound);
    }

    // Uniform double in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Derives an independent stream, e.g. one per subsystem of a run.
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0xD6E8FEB86659FD93ull));
    }

private:
    std::uint64_t state_;
};

} // namespace kdnsim
