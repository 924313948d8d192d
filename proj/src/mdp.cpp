#include "falp/mdp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace falp {

bool Box::contains(const Vec& x, double tol) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= lo[i] - tol && x[i] <= hi[i] + tol)) return false;
    return true;
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
}

Vec Box::sample(Rng& rng) const {
    Vec x(lo.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
    return x;
}

NoiseSupport NoiseSupport::finite(std::vector<Vec> values, Vec probs) {
    if (values.empty() || values.size() != probs.size())
        throw std::invalid_argument("noise support: values and probabilities must match");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0) throw std::invalid_argument("noise support: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("noise support: probabilities must sum to 1");
    return NoiseSupport{std::move(values), std::move(probs), true};
}

NoiseSupport NoiseSupport::sample_average(std::vector<Vec> samples) {
    if (samples.empty()) throw std::invalid_argument("noise support: empty sample set");
    Vec w(samples.size(), 1.0 / static_cast<double>(samples.size()));
    return NoiseSupport{std::move(samples), std::move(w), false};
}

StateDistribution StateDistribution::degenerate(const Vec& s) {
    return StateDistribution{[s](Rng&) { return s; }, {s}, {1.0}};
}

StateDistribution StateDistribution::uniform_box(const Box& box, std::vector<Vec> atoms) {
    Vec w(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    return StateDistribution{[box](Rng& rng) { return box.sample(rng); }, std::move(atoms), std::move(w)};
}

StateDistribution StateDistribution::sampled(std::function<Vec(Rng&)> sampler, std::size_t count, Rng& rng) {
    if (count == 0) throw std::invalid_argument("state distribution: empty quadrature");
    std::vector<Vec> atoms;
    atoms.reserve(count);
    for (std::size_t i = 0; i < count; ++i) atoms.push_back(sampler(rng));
    Vec w(count, 1.0 / static_cast<double>(count));
    return StateDistribution{std::move(sampler), std::move(atoms), std::move(w)};
}

bool DiscountedMdp::feasible(const Vec& s, const Vec& a) const {
    return state_box.contains(s) && action_box.contains(a);
}

void DiscountedMdp::check_pair(const Vec& s, const Vec& a) const {
    if (!feasible(s, a)) throw std::domain_error(name + ": infeasible state-action pair");
}

Vec DiscountedMdp::sample_noise(Rng& rng) const {
    if (noise_sampler) return noise_sampler(rng);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < noise.size(); ++k) {
        acc += noise.weights[k];
        if (u < acc) return noise.values[k];
    }
    return noise.values.back();
}

double DiscountedMdp::expected_cost(const Vec& s, const Vec& a) const {
    double total = 0.0;
    for (std::size_t k = 0; k < noise.size(); ++k) total += noise.weights[k] * cost(s, a, noise.values[k]);
    return total;
}

double expected_basis_value(const DiscountedMdp& mdp, const Vec& s, const Vec& a,
                            const std::function<double(const Vec&)>& f) {
    mdp.check_pair(s, a);
    double total = 0.0;
    for (std::size_t k = 0; k < mdp.noise.size(); ++k)
        total += mdp.noise.weights[k] * f(mdp.transition(s, a, mdp.noise.values[k]));
    return total;
}

Vec sample_initial_state(const DiscountedMdp& mdp, Rng& rng) { return mdp.initial.sample(rng); }

std::vector<Vec> box_grid(const Box& box, std::size_t points) {
    if (points < 2) throw std::invalid_argument("grid needs at least 2 points per coordinate");
    const std::size_t d = box.dim();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= points;
    std::vector<Vec> grid;
    grid.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t n = 0; n < total; ++n) {
        Vec x(d);
        for (std::size_t i = 0; i < d; ++i)
            x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(idx[i]) / static_cast<double>(points - 1);
        grid.push_back(std::move(x));
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < points) break;
            idx[i] = 0;
        }
    }
    return grid;
}

}  // namespace falp
