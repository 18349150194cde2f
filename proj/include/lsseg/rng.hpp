#pragma once

#include <cmath>
#include <cstdint>

namespace lsseg {

/// Portable splitmix64-based generator. Outputs are identical on every
/// platform; split() derives independent per-instance streams.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1)
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// inclusive bounds
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }

    /// standard normal via Box-Muller (no cached second value, for splittability)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    Rng split(uint64_t stream) const {
        Rng child(state ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
        child.next();
        return child;
    }
};

}  // namespace lsseg
