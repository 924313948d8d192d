#pragma once

#include "falp/bases.hpp"
#include "falp/mdp.hpp"
#include "falp/vfa.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace falp {

struct SimConfig {
    std::size_t horizon = 0;  // 0: default_horizon(gamma)
    std::size_t replications = 1000;
    std::size_t action_grid = 101;
    std::uint64_t rollout_seed = 1;
    std::size_t threads = 1;
};

struct PolicyCostEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t replications = 0;
    std::size_t horizon = 0;
};

using Policy = std::function<Vec(const Vec& s)>;

// ceil(ln(1e-3) / ln(gamma))
std::size_t default_horizon(double gamma);

std::vector<Vec> action_grid(const DiscountedMdp& mdp, std::size_t points);

// Grid minimizer of c(s, a) + gamma E[V(s') | s, a]; ties go to the first
// grid point (lexicographically smallest action).
Vec greedy_action(const DiscountedMdp& mdp, const ValueFunction& v, const Vec& s, const std::vector<Vec>& grid);
Vec greedy_action(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w, const Vec& s,
                  const std::vector<Vec>& grid);

Policy greedy_policy(const DiscountedMdp& mdp, const ValueFunction& v, std::vector<Vec> grid);

// Truncated discounted rollouts from chi. Replication r uses stream r of
// rollout_seed. When `trace` is given, replication 0 is written as CSV.
PolicyCostEstimate simulate_policy(const DiscountedMdp& mdp, const Policy& policy, const SimConfig& sim,
                                   std::ostream* trace = nullptr);
PolicyCostEstimate simulate_policy_cost(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        const SimConfig& sim, std::ostream* trace = nullptr);


struct VisitHistogram {
    Box box;
    std::size_t bins = 1;     // per coordinate
    std::vector<double> mass;  // unnormalized discounted occupancy
    double total = 0.0;

    std::size_t bin_of(const Vec& s) const;
    std::vector<double> normalized() const;
};

// chi mass plus sum_t gamma^(t+1) P(s_(t+1) in bin), estimated by rollouts.
VisitHistogram estimate_visit_frequency(const DiscountedMdp& mdp, const Policy& policy, std::size_t bins,
                                        const SimConfig& sim);
VisitHistogram estimate_visit_frequency(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        std::size_t bins, const SimConfig& sim);

}  // namespace falp
