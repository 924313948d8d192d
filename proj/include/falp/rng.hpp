#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace falp {

// Seeded generator. All draws are implemented here rather than through
// std distributions so that streams reproduce across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), eng_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    // Uniform over {0, ..., n-1}.
    std::size_t index(std::size_t n);

    // Independent child stream; deterministic in (seed, stream).
    Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL))); }

    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace falp
