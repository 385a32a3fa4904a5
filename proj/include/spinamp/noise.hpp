#pragma once

#include <cmath>
#include <cstdint>

// Deterministic white-noise source. Each sample is derived from (seed, index)
// with a splitmix64 finalizer, so serial and parallel evaluation produce
// bit-identical streams and golden files reproduce across runs.

namespace spinamp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based Gaussian stream, standard deviation 1.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : seed_(seed) {}

    /// i-th standard normal variate; pure function of (seed, i).
    double at(std::uint64_t i) const {
        const std::uint64_t a = splitmix64(seed_ ^ splitmix64(2 * i));
        const std::uint64_t b = splitmix64(seed_ ^ splitmix64(2 * i + 1));
        // u1 in (0, 1], u2 in [0, 1): Box-Muller.
        const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::uint64_t seed_;
};

}  // namespace spinamp
