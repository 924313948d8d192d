#include "falp/toy.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <stdexcept>

namespace falp {

namespace {
// Composite 20-point Gauss-Legendre rule on [0, 1]; exact to rounding for the
// cosine bases used here.
StateDistribution uniform_unit_interval(std::size_t panels = 50) {
    using rule = boost::math::quadrature::gauss<double, 20>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    std::vector<Vec> atoms;
    Vec weights;
    const double h = 1.0 / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * h;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double wk = 0.5 * h * w[k];
            if (x[k] == 0.0) {
                atoms.push_back({mid});
                weights.push_back(wk);
                continue;
            }
            atoms.push_back({mid - 0.5 * h * x[k]});
            weights.push_back(wk);
            atoms.push_back({mid + 0.5 * h * x[k]});
            weights.push_back(wk);
        }
    }
    const Box box{{0.0}, {1.0}};
    return StateDistribution{[box](Rng& rng) { return box.sample(rng); }, std::move(atoms), std::move(weights)};
}
}  // namespace

DiscountedMdp build_toy() {
    DiscountedMdp mdp;
    mdp.name = "toy";
    mdp.state_box = Box{{0.0}, {1.0}};
    mdp.action_box = Box{{0.0}, {1.0}};
    mdp.gamma = kToyGamma;
    mdp.cost = [](const Vec& s, const Vec&, const Vec&) { return std::abs(s[0] - 0.5); };
    // noise 0: stay, noise 1: move to the action.
    mdp.transition = [](const Vec& s, const Vec& a, const Vec& n) { return n[0] == 0.0 ? s : a; };
    mdp.noise = NoiseSupport::finite({{0.0}, {1.0}}, {0.1, 0.9});
    mdp.initial = uniform_unit_interval();
    mdp.relevance = mdp.initial;
    return mdp;
}

double toy_value_function(double s) {
    if (!(s >= -kBoxTol && s <= 1.0 + kBoxTol)) throw std::domain_error("toy value function: s outside [0, 1]");
    return std::abs(s - 0.5) / (1.0 - 0.1 * kToyGamma);
}

double toy_constant_policy_cost(double a_star) {
    if (!(a_star >= -kBoxTol && a_star <= 1.0 + kBoxTol)) throw std::domain_error("toy policy cost: action outside [0, 1]");
    const double g = kToyGamma;
    return (0.25 + (0.9 * g / (1.0 - g)) * std::abs(a_star - 0.5)) / (1.0 - 0.1 * g);
}

std::vector<Vec> toy_state_grid(std::size_t points) { return box_grid(Box{{0.0}, {1.0}}, points); }
std::vector<Vec> toy_action_grid(std::size_t points) { return box_grid(Box{{0.0}, {1.0}}, points); }

BasisSet toy_basis_set(const std::vector<double>& thetas) {
    BasisSet set = BasisSet::fourier(1, 1.0, 1.0, 0, true);
    for (double t : thetas) set.push(FourierBasis{0.0, {t}, 1.0});
    return set;
}

BasisSet toy_random_bases(std::uint64_t seed) { return BasisSet::fourier(1, 0.1, 1.0, seed, true); }

}  // namespace falp
