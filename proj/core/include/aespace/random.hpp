#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace aespace {

/// Seeded random stream used by every stochastic component.
///
/// The engine is std::mt19937_64 constructed directly from the 64-bit seed;
/// its output sequence is fixed by the C++ standard. The standard library
/// distributions are implementation-defined, so the transforms below are
/// written out here to keep generated data identical across toolchains:
///
///  - uniform01: top 53 bits of one engine draw, scaled by 2^-53, in [0, 1).
///  - index(n):  rejection on the largest multiple of n below 2^64, then modulo.
///  - normal:    Box-Muller on two uniform01 draws, cosine branch only.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace aespace
