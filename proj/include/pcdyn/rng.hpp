#pragma once

// Deterministic random streams.  Every Monte Carlo sample owns a stream
// derived from (seed, sample index), so results do not depend on execution
// order and serial/parallel runs agree bit-for-bit.  splitmix64 is used both
// as the stream-derivation hash and as the generator itself; it is tiny,
// well studied, and (unlike std:: distributions) has output pinned by this
// header rather than by the standard library implementation.

#include <cstdint>
#include <cmath>

namespace pcdyn {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {
        // Warm up so that small consecutive seeds decorrelate immediately.
        splitmix64_next(state_);
        splitmix64_next(state_);
    }

    // Stream for one ensemble member: position-addressable, order-independent.
    static RandomStream for_sample(std::uint64_t seed, std::uint64_t sample_index) {
        std::uint64_t s = seed;
        const std::uint64_t a = splitmix64_next(s);
        s = a ^ (sample_index * 0xda942042e4dd58b5ull + 0x2545f4914f6cdd1dull);
        return RandomStream(s);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (-1,1).
    double uniform_sym() { return 2.0 * uniform01() - 1.0; }

    // Standard normal via Box-Muller (one value per call; the partner draw
    // is discarded to keep the per-sample draw count fixed and obvious).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::uint64_t state_;
};

}  // namespace pcdyn
