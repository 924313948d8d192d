#pragma once

#include "falp/mdp.hpp"
#include "falp/rng.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace falp {

enum class BasisKind { Fourier, Stump };

// cos(q + omega . s)
struct FourierBasis {
    double q = 0.0;
    Vec omega;
    double sigma = 1.0;
};

// Surrogate of sgn(s_q - omega); q_index is 1-based.
struct StumpBasis {
    std::size_t q_index = 1;
    double omega = 0.0;
    double sigma = 1.0;
};

inline constexpr double kStumpEps = 0.01;

double eval_fourier(const FourierBasis& b, const Vec& s);
double stump_surrogate(double x, double eps);
double eval_stump(const StumpBasis& b, const Vec& s, double eps = kStumpEps);

// Ordered random bases. Entry i is drawn from stream i of the set seed, so
// any prefix is reproducible and extending never changes earlier entries.
class BasisSet {
public:
    static BasisSet fourier(std::size_t dim, double sigma_lo, double sigma_hi, std::uint64_t seed,
                            bool zero_phase = false);
    static BasisSet stumps(std::size_t dim, double sigma_lo, double sigma_hi, std::uint64_t seed,
                           double eps = kStumpEps);

    BasisKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return kind_ == BasisKind::Fourier ? fourier_.size() : stumps_.size(); }
    std::uint64_t seed() const { return seed_; }
    double sigma_lo() const { return sigma_lo_; }
    double sigma_hi() const { return sigma_hi_; }
    bool zero_phase() const { return zero_phase_; }
    double eps() const { return eps_; }
    // The single threshold scale shared by all stumps of the set.
    double stump_sigma() const;

    const std::vector<FourierBasis>& fourier_entries() const { return fourier_; }
    const std::vector<StumpBasis>& stump_entries() const { return stumps_; }

    void extend(std::size_t count);
    void push(const FourierBasis& b);
    void push(const StumpBasis& b);
    BasisSet prefix(std::size_t n) const;

    double eval(std::size_t i, const Vec& s) const;
    // Values of the first n bases at s.
    void eval_all(const Vec& s, std::size_t n, double* out) const;

private:
    BasisKind kind_ = BasisKind::Fourier;
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
    double sigma_lo_ = 1.0, sigma_hi_ = 1.0;
    bool zero_phase_ = false;
    double eps_ = kStumpEps;
    std::vector<FourierBasis> fourier_;
    std::vector<StumpBasis> stumps_;
};

BasisSet sample_fourier(std::size_t count, std::size_t dim, double sigma_lo, double sigma_hi, Rng& rng);
BasisSet sample_stumps(std::size_t count, std::size_t dim, double sigma_lo, double sigma_hi, Rng& rng);

nlohmann::json to_json(const BasisSet& set);
BasisSet basis_set_from_json(const nlohmann::json& j);

struct BoundConstants {
    double omega_const = 0.0;
    double delta_const = 0.0;
    double lipschitz = 1.0;
    double state_diameter = 0.0;
};

// E||theta||^2 for Fourier bases with sigma ~ U[lo, hi]: d/(lo*hi) + pi^2/3.
double fourier_theta_second_moment(std::size_t dim, double sigma_lo, double sigma_hi);
double delta_constant(double delta);
double omega_constant(double state_diameter, double lipschitz, double theta_second_moment);
// max ||s||_2 over the box.
double state_diameter(const Box& box);
BoundConstants fourier_bound_constants(const Box& state_box, double sigma_lo, double sigma_hi, double delta);

long long falp_sample_bound(double eps, double delta, double b_norm, const BoundConstants& c, double gamma);

}  // namespace falp
