#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cbm::sim {

/// Portable pseudo-random source. Reproducible across platforms and
/// languages from the documented algorithms alone:
///
///   engine    std::mt19937_64 (MT19937-64, standard seeding)
///   uniform   (engine() >> 11) * 2^-53                       in [0, 1)
///   normal    Box-Muller: sqrt(-2 ln(1 - u1)) * cos(2 pi u2), two uniforms per draw
///   weibull   eta * (-ln(1 - u))^(1/beta)
///   streams   seed of stream k = splitmix64(seed + k * 0x9E3779B97F4A7C15)
///
/// std:: distributions are avoided since their output is implementation-defined.
class Random {
  public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    static Random stream(std::uint64_t seed, std::uint64_t k) {
        return Random(splitmix64(seed + k * 0x9E3779B97F4A7C15ULL));
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    double weibull(double beta, double eta) { return eta * std::pow(-std::log1p(-uniform()), 1.0 / beta); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace cbm::sim
