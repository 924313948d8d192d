#pragma once

#include "falp/bases.hpp"
#include "falp/mdp.hpp"

#include <vector>

namespace falp {

inline constexpr double kToyGamma = 0.9;
inline constexpr std::size_t kToyStateGrid = 1001;
inline constexpr std::size_t kToyActionGrid = 101;

// s, a in [0, 1]; s' = s w.p. 0.1 and s' = a w.p. 0.9; c(s, a) = |s - 0.5|.
// chi = nu = uniform on [0, 1], integrated by Gauss-Legendre quadrature.
DiscountedMdp build_toy();

double toy_value_function(double s);
// Uniform-start cost of always playing a_star.
double toy_constant_policy_cost(double a_star);

std::vector<Vec> toy_state_grid(std::size_t points = kToyStateGrid);
std::vector<Vec> toy_action_grid(std::size_t points = kToyActionGrid);

// cos(theta * s) bases with the given frequencies.
BasisSet toy_basis_set(const std::vector<double>& thetas);
// Random cos(theta * s) bases, theta ~ N(0, sigma^-2), sigma ~ U[0.1, 1].
BasisSet toy_random_bases(std::uint64_t seed);

}  // namespace falp
