#pragma once

// xoshiro256** streams keyed by (master seed, stream index).

#include <cmath>
#include <complex>
#include <cstdint>

namespace serlink {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    /// Stream `stream` of master seed `seed`. Distinct (seed, stream) pairs give
    /// statistically independent sequences.
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed;
        const std::uint64_t salt = splitmix64(sm);
        std::uint64_t mix = salt ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
        for (auto& word : s_) word = splitmix64(mix);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0, 1], never zero so logarithms stay finite.
    double uniform_pos() { return ((next() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform on [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential; the squared magnitude of a unit-variance complex Gaussian.
    double exponential() { return -std::log(uniform_pos()); }

    /// Circularly-symmetric complex Gaussian, E|h|² = 1 (Marsaglia polar method).
    std::complex<double> complex_normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s >= 1.0 || s == 0.0) continue;
            const double f = std::sqrt(-std::log(s) / s);
            return {u * f, v * f};
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace serlink
