#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace v2p {

// splitmix64 (Vigna, public domain). Used to derive independent stream
// seeds from a (base seed, stream index) pair so that per-scene generation
// is order-independent and reproducible across implementations.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 1));
}

/// Portable seeded generator.
///
/// Engine: std::mt19937_64 (bit-exact output sequence mandated by the C++
/// standard). All value transforms are spelled out here instead of using
/// std::*_distribution, whose outputs are implementation-defined:
///   uniform01: top 53 bits of one draw, scaled by 2^-53  -> [0,1)
///   normal:    Box-Muller on two uniform01 draws (pair cached)
///   uniform_int: draw * (n) >> 64 via 128-bit multiply (Lemire reduction,
///                no rejection; bias < 2^-64 is irrelevant at our scales)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    /// Standard normal.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Deterministic Fisher-Yates shuffle (std::shuffle draws in an
    /// implementation-defined way, so it is avoided).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace v2p
