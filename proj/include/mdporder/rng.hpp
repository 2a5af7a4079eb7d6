#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace mdporder {

// SplitMix64 finalizer. Used to turn structured counters into well-mixed keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a key from a seed and a path of counters, e.g.
/// derive_key(seed, {trajectory, time, tag}). Distinct paths give
/// statistically independent streams, so work can be generated in any order.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t v : path) h = mix64(h ^ mix64(v + 0x3c6ef372fe94f82bULL));
    return h;
}

/// xoshiro256** seeded through SplitMix64, with the handful of distributions
/// this project needs. The distributions are written out here rather than
/// taken from <random> because the standard leaves their algorithms
/// unspecified, and datasets must be byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t key) noexcept {
        std::uint64_t s = key;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            word = mix64(s);
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n). Lemire's nearly-divisionless method.
    std::size_t below(std::size_t n) noexcept {
        if (n <= 1) return 0;
        const auto bound = static_cast<std::uint64_t>(n);
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Chi-squared with an integer number of degrees of freedom.
    double chi_squared(unsigned df) noexcept {
        double sum = 0.0;
        for (unsigned i = 0; i < df; ++i) {
            const double z = normal();
            sum += z * z;
        }
        return sum;
    }

    /// Poisson by multiplication of uniforms (Knuth); fine for small means.
    unsigned poisson(double mean) noexcept {
        const double limit = std::exp(-mean);
        unsigned count = 0;
        double product = uniform();
        while (product > limit) {
            ++count;
            product *= uniform();
        }
        return count;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mdporder
