#pragma once

#include "wmc/core.hpp"

#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace wmc {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Hashes a master seed together with a tuple of stream coordinates
/// (e.g. dimension, sample size, trial) into a child seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t c : coords)
        h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ull));
    return h;
}

/// Seeded random stream: std::mt19937_64 for raw bits, with the uniform,
/// normal and Laplace transforms written out here so that draws are
/// identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Zero-mean Laplace with unit variance (scale 1/sqrt(2)).
    double laplace() {
        const double u = uniform() - 0.5;
        const double scale = 1.0 / std::numbers::sqrt2;
        const double mag = -scale * std::log(1.0 - 2.0 * std::abs(u));
        return u < 0 ? -mag : mag;
    }

    int sign() { return (engine_() >> 63) ? 1 : -1; }

    Matrix gaussian(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i)
                m(i, j) = normal();
        return m;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace wmc
