#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic random number utilities. The engine is std::mt19937_64 (fully
// specified by the standard) and all transforms are hand-rolled, so a given
// seed reproduces the same stream on any platform. Substreams are derived by
// mixing the master seed with an index, which is how Monte-Carlo work is
// split across chunks/replications without losing reproducibility.

namespace posi::math {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0,1)
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    // uniform on (0,1]
    double uniform_pos() { return ((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller with one cached mate
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Laplace with mean 0 and the given scale
    double laplace(double scale) {
        const double u = uniform() - 0.5;
        const double mag = -scale * std::log1p(-2.0 * std::fabs(u));
        return u < 0.0 ? -mag : mag;
    }

    // skew-normal with location 0, scale 1, shape alpha (Azzalini form)
    double skew_normal(double alpha) {
        const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
        const double z0 = normal();
        const double z1 = normal();
        return delta * std::fabs(z0) + std::sqrt(1.0 - delta * delta) * z1;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace posi::math
