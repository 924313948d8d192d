#include "doctest.h"

#include "falp/bases.hpp"

#include <cmath>
#include <numbers>

using namespace falp;

TEST_SUITE("random_bases") {

TEST_CASE("same seed gives identical entries") {
    Rng a(77), b(77);
    const BasisSet x = sample_fourier(20, 3, 100, 1000, a);
    const BasisSet y = sample_fourier(20, 3, 100, 1000, b);
    REQUIRE(x.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(x.fourier_entries()[i].q == y.fourier_entries()[i].q);
        CHECK(x.fourier_entries()[i].omega == y.fourier_entries()[i].omega);
        CHECK(x.fourier_entries()[i].sigma == y.fourier_entries()[i].sigma);
    }
}

TEST_CASE("zero count and bad ranges are parameter errors") {
    Rng r(1);
    CHECK_THROWS_AS(sample_fourier(0, 3, 100, 1000, r), std::invalid_argument);
    CHECK_THROWS_AS(sample_stumps(0, 2, 1, 5, r), std::invalid_argument);
    CHECK_THROWS_AS(sample_fourier(5, 3, 0, 1000, r), std::invalid_argument);
    CHECK_THROWS_AS(sample_fourier(5, 3, 10, 5, r), std::invalid_argument);
}

TEST_CASE("mean absolute frequency matches the sampler law") {
    const double lo = 100, hi = 1000;
    Rng r(2024);
    const BasisSet set = sample_fourier(10000, 3, lo, hi, r);
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (const auto& b : set.fourier_entries()) {
        CHECK(b.sigma >= lo);
        CHECK(b.sigma <= hi);
        CHECK(std::abs(b.q) <= std::numbers::pi);
        for (double w : b.omega) {
            sum += std::abs(w);
            sum2 += w * w;
            ++n;
        }
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    // E|N(0, 1/sigma^2)| = sqrt(2/pi)/sigma, averaged over sigma ~ U[lo, hi].
    const double oracle = std::sqrt(2.0 / std::numbers::pi) * std::log(hi / lo) / (hi - lo);
    CHECK(std::abs(mean - oracle) <= 3 * se);
}

TEST_CASE("Fourier evaluation") {
    CHECK(eval_fourier(FourierBasis{0.0, {0.0, 0.0}, 1}, {3.0, -2.0}) == 1.0);
    CHECK(eval_fourier(FourierBasis{0.0, {2.0}, 1}, {0.0}) == 1.0);
    CHECK(std::abs(eval_fourier(FourierBasis{std::numbers::pi / 2, {0.0}, 1}, {0.4})) <= 1e-12);
    CHECK_THROWS_AS(eval_fourier(FourierBasis{0.0, {1.0, 1.0}, 1}, {0.0}), std::invalid_argument);
}

TEST_CASE("Fourier basis is 1-Lipschitz in its affine argument") {
    Rng r(8);
    for (int k = 0; k < 2000; ++k) {
        const FourierBasis b{r.uniform(-3, 3), {r.normal(), r.normal()}, 1};
        const Vec s{r.uniform(-5, 5), r.uniform(-5, 5)}, t{r.uniform(-5, 5), r.uniform(-5, 5)};
        const double arg_gap = std::abs(b.omega[0] * (s[0] - t[0]) + b.omega[1] * (s[1] - t[1]));
        CHECK(std::abs(eval_fourier(b, s) - eval_fourier(b, t)) <= arg_gap + 1e-15);
    }
}

TEST_CASE("stump surrogate values") {
    const StumpBasis b{1, 0.0, 1.0};
    CHECK(eval_stump(b, {0.5}, 0.01) == 1.0);
    CHECK(eval_stump(b, {0.0}, 0.01) == 0.0);
    CHECK(eval_stump(b, {0.0}, 3.0) == 0.0);
    CHECK(eval_stump(b, {0.005}, 0.01) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eval_stump(b, {-0.2}, 0.01) == -1.0);
    CHECK_THROWS(eval_stump(StumpBasis{3, 0, 1}, {1.0, 2.0}));
}

TEST_CASE("stump agrees with sgn outside the band") {
    Rng r(3);
    for (int k = 0; k < 5000; ++k) {
        const double omega = r.uniform(-2, 2), s = r.uniform(-3, 3), eps = r.uniform(1e-3, 0.5);
        const double x = s - omega;
        const double v = eval_stump(StumpBasis{1, omega, 2}, {s}, eps);
        if (std::abs(x) > eps) CHECK(v == (x > 0 ? 1.0 : -1.0));
        else CHECK(std::abs(v) <= 1.0);
    }
}

TEST_CASE("nested sampling keeps earlier entries bit-identical") {
    BasisSet a = BasisSet::fourier(3, 100, 1000, 99);
    a.extend(10);
    BasisSet b = a;
    b.extend(15);
    BasisSet c = BasisSet::fourier(3, 100, 1000, 99);
    c.extend(25);
    for (std::size_t i = 0; i < 10; ++i) CHECK(b.fourier_entries()[i].omega == a.fourier_entries()[i].omega);
    for (std::size_t i = 0; i < 25; ++i) {
        CHECK(b.fourier_entries()[i].omega == c.fourier_entries()[i].omega);
        CHECK(b.fourier_entries()[i].q == c.fourier_entries()[i].q);
    }
    BasisSet s1 = BasisSet::stumps(4, 1, 8, 5), s2 = BasisSet::stumps(4, 1, 8, 5);
    s1.extend(3);
    s1.extend(4);
    s2.extend(7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(s1.stump_entries()[i].omega == s2.stump_entries()[i].omega);
        CHECK(s1.stump_entries()[i].q_index == s2.stump_entries()[i].q_index);
    }
}

TEST_CASE("stumps share one sigma and stay in range") {
    BasisSet s = BasisSet::stumps(3, 1, 6, 17);
    s.extend(200);
    const double sigma = s.stump_sigma();
    CHECK(sigma >= 1);
    CHECK(sigma <= 6);
    for (const auto& b : s.stump_entries()) {
        CHECK(b.sigma == sigma);
        CHECK(std::abs(b.omega) <= sigma);
        CHECK(b.q_index >= 1);
        CHECK(b.q_index <= 3);
    }
}

TEST_CASE("basis set JSON round trip") {
    BasisSet a = BasisSet::fourier(2, 0.5, 2, 11);
    a.extend(6);
    const BasisSet b = basis_set_from_json(to_json(a));
    REQUIRE(b.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(b.eval(i, {0.3, -1.1}) == a.eval(i, {0.3, -1.1}));
    BasisSet s = BasisSet::stumps(2, 1, 3, 4);
    s.extend(5);
    const BasisSet t = basis_set_from_json(to_json(s));
    for (std::size_t i = 0; i < 5; ++i) CHECK(t.eval(i, {0.7, 2.0}) == s.eval(i, {0.7, 2.0}));
}

TEST_CASE("sample bound with delta = 1") {
    BoundConstants c;
    c.omega_const = 3.0;
    const double g = 0.9, eps = 0.5, b = 2.0;
    const double expect = std::ceil(std::pow(b / eps, 2) * std::pow((1 + g) * 3.0 / 2, 2));
    CHECK(falp_sample_bound(eps, 1.0, b, c, g) == static_cast<long long>(expect));
    CHECK(delta_constant(1.0) == 0.0);
}

TEST_CASE("sample bound edge values") {
    BoundConstants c;
    c.omega_const = 2.0;
    CHECK(falp_sample_bound(0.3, 0.2, 0.0, c, 0.9) == 0);
    CHECK(falp_sample_bound(1.0, std::exp(-0.5), 1.0, c, 0.5) == 7);
    CHECK_THROWS(falp_sample_bound(0.0, 1.0, 1.0, c, 0.5));
    CHECK_THROWS(delta_constant(0.0));
    CHECK_THROWS(delta_constant(1.5));
}

TEST_CASE("delta constant decreases in delta") {
    double prev = delta_constant(1e-6);
    for (double d = 2e-6; d <= 1.0; d *= 1.7) {
        const double v = delta_constant(d);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("theta second moment closed form matches Monte Carlo") {
    Rng r(12);
    const BasisSet set = sample_fourier(40000, 2, 0.5, 2.0, r);
    double acc = 0;
    for (const auto& b : set.fourier_entries()) acc += b.q * b.q + b.omega[0] * b.omega[0] + b.omega[1] * b.omega[1];
    acc /= static_cast<double>(set.size());
    CHECK(acc == doctest::Approx(fourier_theta_second_moment(2, 0.5, 2.0)).epsilon(0.03));
}

}  // TEST_SUITE
