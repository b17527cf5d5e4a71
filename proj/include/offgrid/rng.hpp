#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "offgrid/types.hpp"

namespace offgrid {

// splitmix64 step; used to derive independent per-trial seeds from
// (base seed, snr index, trial index) so Monte-Carlo cells can run in
// any order and still reproduce bit-for-bit.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(base ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b);
}

// Gaussian draws via Box-Muller on top of mt19937_64. std::normal_distribution
// is implementation-defined, so it is avoided to keep streams reproducible.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    // Circular complex Gaussian with E|z|^2 = variance.
    Complex circular(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = s * normal();
        const double im = s * normal();
        return {re, im};
    }

    double uniform01() {
        // 53-bit mantissa from the top bits of a 64-bit draw
        return (engine_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace offgrid
