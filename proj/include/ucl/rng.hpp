#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ucl/common.hpp"

namespace ucl {

// SplitMix64 step. The whole toolkit draws randomness from this one mixer so
// that every run is reproducible bit-for-bit on any platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream. Streams for distinct (seed, a, b) keys are
/// independent; identical keys reproduce the identical sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix_in(0x6a09e667f3bcc908ULL, seed)) {}

    /// Sub-stream derivation, e.g. stream(seed, sample_index, view_index).
    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t s = mix_in(0x6a09e667f3bcc908ULL, seed);
        s = mix_in(s, a);
        s = mix_in(s, b);
        return Rng(FromState{}, s);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Standard normal via Box-Muller. Consumes two draws per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    struct FromState {};
    Rng(FromState, std::uint64_t raw) : state_(raw) {}

    static std::uint64_t mix_in(std::uint64_t state, std::uint64_t v) {
        std::uint64_t s = state ^ (v + 0x9e3779b97f4a7c15ULL);
        return splitmix64(s);
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Salts separating independent uses of one master seed.
namespace rng_purpose {
inline constexpr std::uint64_t kInit = 0x11u;
inline constexpr std::uint64_t kShuffle = 0x22u;
inline constexpr std::uint64_t kSplit = 0x33u;
inline constexpr std::uint64_t kDataGen = 0x44u;
} // namespace rng_purpose

} // namespace ucl
