#pragma once

// Seeded generator with an explicit bits-to-double mapping so certificates
// are reproducible byte for byte across platforms and standard libraries.

#include <cstdint>
#include <random>

namespace bvpcert {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t bits() { return eng_(); }

    // Derive an independent stream for a named stage.
    Rng fork(std::uint64_t tag) const {
        std::mt19937_64 probe = eng_;
        return Rng(probe() ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
    }

private:
    std::mt19937_64 eng_;
};

} // namespace bvpcert
