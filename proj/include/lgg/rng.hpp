#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lgg/error.hpp"

namespace lgg {

/// SplitMix64 (Steele, Lea & Flood). Every derived distribution below is
/// written out explicitly so streams are identical across standard libraries.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ConfigError("below(0) is undefined");
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t r;
        do {
            r = (*this)();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller (one draw per call, no caching).
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Gamma(shape, 1) via Marsaglia & Tsang; shape < 1 uses the U^(1/shape) boost.
    double gamma(double shape) {
        if (!(shape > 0.0) || !std::isfinite(shape)) {
            throw ConfigError("gamma shape must be positive, got " + std::to_string(shape));
        }
        if (shape < 1.0) {
            const double boost = std::pow(uniform_open(), 1.0 / shape);
            return gamma(shape + 1.0) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Symmetric Beta(alpha, alpha) draw strictly inside (0, 1).
inline double sample_beta(double alpha, SplitMix64& rng) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("mixup alpha must be positive, got " + std::to_string(alpha));
    }
    while (true) {
        const double g1 = rng.gamma(alpha);
        const double g2 = rng.gamma(alpha);
        const double lambda = g1 / (g1 + g2);
        if (lambda > 0.0 && lambda < 1.0) return lambda;
    }
}

/// Seed of the independent stream used for graph `index` of a run.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

}  // namespace lgg
