#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace maserrx {

/// Seeded Gaussian source. All stochastic components draw from one of
/// these, handed down explicitly, so a run is reproducible from its seed.
/// Box-Muller on top of mt19937_64 keeps the byte stream independent of
/// the standard library's distribution internals.
class NoiseSource {
  public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        // 53-bit mantissa, strictly inside (0, 1)
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double gaussian(double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a) * sigma;
    }

    /// Seed for sweep point i, independent of thread scheduling.
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i) {
        // splitmix64 step over the pair
        std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (i + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace maserrx
