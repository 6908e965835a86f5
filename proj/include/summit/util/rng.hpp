#pragma once

#include <cmath>
#include <cstdint>

namespace summit::util {

/// splitmix64 step. Good avalanche, cheap, and fully specified, so every
/// stream we derive from it is reproducible across compilers.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless mix of up to three words. Used for counter-based random values
/// (e.g. entries of an implicit random projection matrix).
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = a * 0x9e3779b97f4a7c15ULL + b * 0xc2b2ae3d27d4eb4fULL +
                      c * 0x165667b19e3779f9ULL + 0x27d4eb2f165667c5ULL;
    return splitmix64(s);
}

/// Deterministic sequential RNG for layout optimization and test data.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double next_double() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n). n must be > 0. Uses 64-bit multiply-shift
    /// reduction; slight modulo bias is irrelevant at our n but the result is
    /// platform-stable, which is what matters.
    std::uint64_t next_bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller. Two uniforms per pair of normals; we
    /// discard the second value to keep call sites state-free.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

/// Counter-based standard normal: a pure function of its inputs.
inline double gaussian_at(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    double u1 = double(mix64(seed, i, j * 2) >> 11) * 0x1.0p-53;
    double u2 = double(mix64(seed, i, j * 2 + 1) >> 11) * 0x1.0p-53;
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace summit::util
