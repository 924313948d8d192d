#include "falp/rng.hpp"

#include <cmath>
#include <numbers>

namespace falp {

std::uint64_t Rng::mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

std::size_t Rng::index(std::size_t n) {
    if (n <= 1) return 0;
    // Lemire's multiply-shift with rejection.
    const std::uint64_t range = n;
    unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t t = (0 - range) % range;
        while (low < t) {
            m = static_cast<unsigned __int128>(eng_()) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

}  // namespace falp
