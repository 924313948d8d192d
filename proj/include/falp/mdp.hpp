#pragma once

#include "falp/rng.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace falp {

using Vec = std::vector<double>;

inline constexpr double kBoxTol = 1e-9;

struct Box {
    Vec lo, hi;

    std::size_t dim() const { return lo.size(); }
    bool contains(const Vec& x, double tol = kBoxTol) const;
    double volume() const;
    Vec sample(Rng& rng) const;
};

// Either an exact finite distribution or a fixed sample-average set.
struct NoiseSupport {
    std::vector<Vec> values;
    Vec weights;
    bool exact = true;

    static NoiseSupport finite(std::vector<Vec> values, Vec probs);
    static NoiseSupport sample_average(std::vector<Vec> samples);
    std::size_t size() const { return values.size(); }
};

// A distribution over states with a sampler and a fixed quadrature
// (atoms and weights) used for expectations such as E_chi[V].
struct StateDistribution {
    std::function<Vec(Rng&)> sampler;
    std::vector<Vec> atoms;
    Vec weights;

    static StateDistribution degenerate(const Vec& s);
    static StateDistribution uniform_box(const Box& box, std::vector<Vec> atoms);
    // Quadrature from `count` sampler draws with equal weights.
    static StateDistribution sampled(std::function<Vec(Rng&)> sampler, std::size_t count, Rng& rng);

    Vec sample(Rng& rng) const { return sampler(rng); }
};

// Optional structure s' = base(s, a) + shift(s, noise). When present,
// Fourier expectations factor so that the noise average is computed once
// per state and reused across actions.
struct AdditiveTransition {
    std::function<Vec(const Vec& s, const Vec& a)> base;
    std::function<void(const Vec& s, const Vec& noise, Vec& shift)> shift;
    // Optional closed form of the noise averages of cos(omega.shift) and
    // sin(omega.shift); must agree with `shift` over the MDP's noise support.
    std::function<void(const Vec& s, const Vec& omega, double& cos_mean, double& sin_mean)> fourier_moments;
};

struct DiscountedMdp {
    std::string name;
    Box state_box;
    Box action_box;
    double gamma = 0.9;
    std::function<double(const Vec& s, const Vec& a, const Vec& noise)> cost;
    std::function<Vec(const Vec& s, const Vec& a, const Vec& noise)> transition;
    NoiseSupport noise;
    // Draws from the true noise law in simulation; defaults to the support.
    std::function<Vec(Rng&)> noise_sampler;
    StateDistribution initial;    // chi
    StateDistribution relevance;  // nu
    std::optional<AdditiveTransition> additive;

    bool feasible(const Vec& s, const Vec& a) const;
    void check_pair(const Vec& s, const Vec& a) const;
    Vec sample_noise(Rng& rng) const;
    double expected_cost(const Vec& s, const Vec& a) const;
};

double expected_basis_value(const DiscountedMdp& mdp, const Vec& s, const Vec& a,
                            const std::function<double(const Vec&)>& f);

Vec sample_initial_state(const DiscountedMdp& mdp, Rng& rng);

// Deterministic average-cost semi-MDP.
struct SemiMdp {
    Box state_box;
    std::function<bool(const Vec& s, const Vec& a)> feasible;
    std::function<double(const Vec& s, const Vec& a)> cost;
    std::function<double(const Vec& s, const Vec& a)> transition_time;
    std::function<Vec(const Vec& s, const Vec& a)> transition;
};

// Grid with `points` equally spaced values per coordinate of the box,
// enumerated lexicographically (first coordinate slowest).
std::vector<Vec> box_grid(const Box& box, std::size_t points);

}  // namespace falp
