#include "falp/policy.hpp"

#include "falp/parallel.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace falp {

std::size_t default_horizon(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
    return static_cast<std::size_t>(std::ceil(std::log(1e-3) / std::log(gamma)));
}

std::vector<Vec> action_grid(const DiscountedMdp& mdp, std::size_t points) { return box_grid(mdp.action_box, points); }

Vec greedy_action(const DiscountedMdp& mdp, const ValueFunction& v, const Vec& s, const std::vector<Vec>& grid) {
    std::vector<Vec> feasible;
    feasible.reserve(grid.size());
    for (const auto& a : grid)
        if (mdp.feasible(s, a)) feasible.push_back(a);
    if (feasible.empty()) throw std::domain_error("greedy_action: no feasible grid action");
    Vec next;
    v.expected_next(mdp, s, feasible, next);
    Vec q(feasible.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < feasible.size(); ++j) {
        q[j] = mdp.expected_cost(s, feasible[j]) + mdp.gamma * next[j];
        best = std::min(best, q[j]);
    }
    const double tol = 1e-12 * (1.0 + std::abs(best));
    for (std::size_t j = 0; j < feasible.size(); ++j)
        if (q[j] <= best + tol) return feasible[j];
    return feasible.front();
}

Vec greedy_action(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w, const Vec& s,
                  const std::vector<Vec>& grid) {
    return greedy_action(mdp, LinearVfa(bases, w), s, grid);
}

Policy greedy_policy(const DiscountedMdp& mdp, const ValueFunction& v, std::vector<Vec> grid) {
    return [&mdp, &v, grid = std::move(grid)](const Vec& s) { return greedy_action(mdp, v, s, grid); };
}

namespace {
void write_vec(std::ostream& os, const Vec& x) {
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ";" : "") << x[i];
}
}  // namespace

PolicyCostEstimate simulate_policy(const DiscountedMdp& mdp, const Policy& policy, const SimConfig& sim,
                                   std::ostream* trace) {
    if (sim.replications == 0) throw std::invalid_argument("replications must be positive");
    const std::size_t horizon = sim.horizon ? sim.horizon : default_horizon(mdp.gamma);
    std::vector<double> totals(sim.replications, 0.0);
    const Rng root(sim.rollout_seed);
    if (trace) *trace << "stage,state,action,cost\n";
    parallel_for(sim.replications, sim.threads, [&](std::size_t r) {
        Rng rng = root.split(r);
        Vec s = mdp.initial.sample(rng);
        double disc = 1.0, total = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const Vec a = policy(s);
            const Vec noise = mdp.sample_noise(rng);
            const double c = mdp.cost(s, a, noise);
            if (trace && r == 0) {
                *trace << t << ',';
                write_vec(*trace, s);
                *trace << ',';
                write_vec(*trace, a);
                *trace << ',' << c << '\n';
            }
            total += disc * c;
            disc *= mdp.gamma;
            s = mdp.transition(s, a, noise);
        }
        totals[r] = total;
    });
    PolicyCostEstimate est;
    est.replications = sim.replications;
    est.horizon = horizon;
    double sum = 0.0;
    for (double t : totals) sum += t;
    est.mean = sum / static_cast<double>(totals.size());
    if (totals.size() > 1) {
        double ss = 0.0;
        for (double t : totals) ss += (t - est.mean) * (t - est.mean);
        est.stderr_ = std::sqrt(ss / static_cast<double>(totals.size() - 1) / static_cast<double>(totals.size()));
    }
    return est;
}

PolicyCostEstimate simulate_policy_cost(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        const SimConfig& sim, std::ostream* trace) {
    const LinearVfa v(bases, w);
    return simulate_policy(mdp, greedy_policy(mdp, v, action_grid(mdp, sim.action_grid)), sim, trace);
}

std::size_t VisitHistogram::bin_of(const Vec& s) const {
    std::size_t idx = 0;
    for (std::size_t c = 0; c < box.dim(); ++c) {
        const double width = box.hi[c] - box.lo[c];
        const double u = width > 0 ? (s[c] - box.lo[c]) / width : 0.0;
        auto k = static_cast<long long>(std::floor(u * static_cast<double>(bins)));
        k = std::clamp<long long>(k, 0, static_cast<long long>(bins) - 1);
        idx = idx * bins + static_cast<std::size_t>(k);
    }
    return idx;
}

std::vector<double> VisitHistogram::normalized() const {
    std::vector<double> out(mass.size(), 0.0);
    if (total <= 0) return out;
    for (std::size_t i = 0; i < mass.size(); ++i) out[i] = mass[i] / total;
    return out;
}

VisitHistogram estimate_visit_frequency(const DiscountedMdp& mdp, const Policy& policy, std::size_t bins,
                                        const SimConfig& sim) {
    if (bins == 0) throw std::invalid_argument("bins must be positive");
    if (sim.replications == 0) throw std::invalid_argument("replications must be positive");
    VisitHistogram h;
    h.box = mdp.state_box;
    h.bins = bins;
    std::size_t cells = 1;
    for (std::size_t c = 0; c < h.box.dim(); ++c) cells *= bins;
    h.mass.assign(cells, 0.0);

    for (std::size_t k = 0; k < mdp.initial.atoms.size(); ++k) h.mass[h.bin_of(mdp.initial.atoms[k])] += mdp.initial.weights[k];

    const std::size_t horizon = sim.horizon;
    std::vector<std::vector<double>> per_rep(sim.replications);
    const Rng root(sim.rollout_seed);
    parallel_for(sim.replications, sim.threads, [&](std::size_t r) {
        std::vector<double> local(cells, 0.0);
        Rng rng = root.split(r);
        Vec s = mdp.initial.sample(rng);
        double disc = mdp.gamma;
        for (std::size_t t = 0; t < horizon; ++t) {
            const Vec a = policy(s);
            s = mdp.transition(s, a, mdp.sample_noise(rng));
            local[h.bin_of(s)] += disc;
            disc *= mdp.gamma;
        }
        per_rep[r] = std::move(local);
    });
    const double inv = 1.0 / static_cast<double>(sim.replications);
    for (const auto& local : per_rep)
        for (std::size_t i = 0; i < cells; ++i) h.mass[i] += inv * local[i];
    h.total = 0.0;
    for (double m : h.mass) h.total += m;
    return h;
}

VisitHistogram estimate_visit_frequency(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        std::size_t bins, const SimConfig& sim) {
    const LinearVfa v(bases, w);
    return estimate_visit_frequency(mdp, greedy_policy(mdp, v, action_grid(mdp, sim.action_grid)), bins, sim);
}

}  // namespace falp
