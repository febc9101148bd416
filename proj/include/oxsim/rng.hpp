#pragma once

#include <cmath>
#include <cstdint>

namespace oxsim {

/// splitmix64 step. Used both as a stand-alone mixer and to expand seeds.
inline std::uint64_t split_mix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and up to three
/// indices (cell, cycle, phase...). Serial and parallel runs that derive
/// their streams through this function agree bit for bit.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = master;
    std::uint64_t h = split_mix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= split_mix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4fULL;
    h ^= split_mix64(s);
    s ^= c * 0x165667b19e3779f9ULL;
    h ^= split_mix64(s);
    return h ? h : 0x9e3779b97f4a7c15ULL;
}

/// xoshiro256++ with explicit uniform/exponential/normal draws.
///
/// The standard library distributions are implementation-defined, which
/// would break the bit-identical trajectory contract across toolchains;
/// every stochastic draw in the simulator goes through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = split_mix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Exponential waiting time with the given rate (events per second).
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    /// Gaussian draw via Box-Muller; caches the paired deviate.
    double normal(double mean, double sigma) {
        if (has_cached_) {
            has_cached_ = false;
            return mean + sigma * cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return mean + sigma * radius * std::cos(angle);
    }

    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t value = next_u64();
            if (value >= threshold) return value % bound;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace oxsim
