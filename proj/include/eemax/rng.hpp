#ifndef EEMAX_RNG_HPP
#define EEMAX_RNG_HPP

#include <cmath>
#include <cstdint>

namespace eemax {

/// Deterministic xoshiro256++ generator seeded through splitmix64.
/// Standard-library distributions are implementation defined, so all
/// sampling is done here to keep datasets and training runs
/// bit-reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (int i = 0; i < 4; ++i) state_[i] = splitmix64(x);
    }

    /// Independent stream keyed by (seed, stream ids). Used to give every
    /// (sample, epoch, ...) its own generator so parallel evaluation order
    /// cannot change the draws.
    static Rng stream(uint64_t seed, uint64_t id0, uint64_t id1 = 0, uint64_t id2 = 0) {
        uint64_t x = seed;
        uint64_t h = splitmix64(x);
        x ^= 0x9e3779b97f4a7c15ULL + id0;
        h ^= splitmix64(x);
        x ^= 0xbf58476d1ce4e5b9ULL + id1;
        h ^= splitmix64(x);
        x ^= 0x94d049bb133111ebULL + id2;
        h ^= splitmix64(x);
        return Rng(h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller; one value per call, no caching so
    /// the draw count stays predictable.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t state_[4];
};

} // namespace eemax

#endif
