// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_RNG_HPP
#define THINKROUTER_CORE_RNG_HPP

#include <array>
#include <cstdint>

namespace tr {

// xoshiro256** seeded through splitmix64 (Blackman & Vigna, public domain).
//
// The standard-library engines/distributions are not an option here: while
// std::mt19937_64 itself is pinned by the standard, std::uniform_*_distribution
// and std::shuffle are implementation-defined, so two builds of the same run
// could draw different tokens. Everything downstream (multinomial draws,
// routing coins, validation splits, toy weights) goes through this generator
// so that a recorded seed replays bit-identically anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64: decorrelates nearby seeds and never yields an all-zero state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9E3779B97F4A7C15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            word = z ^ (z >> 31);
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

    // uniform double in [0, 1), 53 significant bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform double in [lo, hi)
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // uniform integer in [0, n), n >= 1; Lemire-style rejection kept simple:
    // plain modulo would bias small n, so reject the uneven tail instead.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace tr

#endif
