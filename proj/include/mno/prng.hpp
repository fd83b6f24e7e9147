#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mno {

/// Derives an independent 64-bit stream seed from (seed, stream) via one
/// SplitMix64 finalizer step.  Used everywhere a reproducible sub-stream is
/// needed (per-snippet seeds, per-epoch shuffles, retry seeds), so generation
/// order never affects the draws.  Algorithm and constants are documented in
/// docs/FORMATS.md for cross-language reproduction.
inline std::uint64_t split_mix(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256++ generator with SplitMix64 state expansion.
/// All floating-point draws are defined in terms of next() so that any
/// implementation of the two documented algorithms reproduces them bit-exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // Expand the seed through successive SplitMix64 outputs; an all-zero
        // xoshiro state is unreachable this way.
        for (int i = 0; i < 4; ++i) s_[i] = split_mix(seed, static_cast<std::uint64_t>(i) + 0x5EEDull);
    }
    Rng(std::uint64_t seed, std::uint64_t stream) : Rng(split_mix(seed, stream)) {}

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double u01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] via the scaled-floor construction
    /// lo + floor(u01 * (hi - lo + 1)); the (negligible) floor bias is accepted
    /// for the sake of a trivially portable definition.
    int uniform_int(int lo, int hi) noexcept {
        const double span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
        int v = lo + static_cast<int>(std::floor(u01() * span));
        return v > hi ? hi : v;
    }

    /// Uniform double in (-a, a).
    double uniform_sym(double a) noexcept { return a * (2.0 * u01() - 1.0); }

    /// Standard normal via Box-Muller; draws come in deterministic pairs.
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1)); // 1-u1 in (0,1], log finite
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mno
