#pragma once

#include "falp/bases.hpp"
#include "falp/lp.hpp"
#include "falp/mdp.hpp"
#include "falp/vfa.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace falp {

struct ConstraintSamplePlan {
    std::vector<Vec> states;   // paired with actions
    std::vector<Vec> actions;
    std::vector<Vec> guide_states;

    std::size_t size() const { return states.size(); }

    // n uniform draws over the state and action boxes; guides are the drawn states.
    static ConstraintSamplePlan uniform(const DiscountedMdp& mdp, std::size_t n, Rng& rng);
    // Full product of the grids; guides are the state grid.
    static ConstraintSamplePlan product(const std::vector<Vec>& state_grid, const std::vector<Vec>& action_grid);
};

class SolverError : public std::runtime_error {
public:
    SolverError(LpStatus status, const std::string& what) : std::runtime_error(what), status_(status) {}
    LpStatus status() const { return status_; }

private:
    LpStatus status_;
};

// Per-plan cache of row data. Feature columns are appended as the basis set
// grows, so nested models share all earlier work.
class AlpData {
public:
    AlpData(const DiscountedMdp& mdp, ConstraintSamplePlan plan);

    void sync(const BasisSet& bases);
    std::size_t num_bases() const { return phi_.size(); }
    const ConstraintSamplePlan& plan() const { return plan_; }

    LpModel falp(std::size_t n) const;
    // prev == nullptr: no self-guiding rows.
    LpModel fglp(std::size_t n, const VfaWeights* prev) const;

    // V(s; w) at every guide state, using cached features.
    Vec guide_values(const VfaWeights& w) const;

private:
    void add_standard_rows(LpModel& model, std::size_t n) const;

    const DiscountedMdp* mdp_;
    ConstraintSamplePlan plan_;
    Vec cost_;
    std::vector<Vec> phi_;        // [basis][row]
    std::vector<Vec> next_phi_;   // [basis][row] E[phi(s') | s, a]
    std::vector<Vec> guide_phi_;  // [basis][guide]
    Vec nu_mean_;                 // [basis]
};

LpModel build_falp(const DiscountedMdp& mdp, const BasisSet& bases, const ConstraintSamplePlan& plan);
LpModel build_fglp(const DiscountedMdp& mdp, const BasisSet& bases, const ConstraintSamplePlan& plan,
                   const VfaWeights* prev);

struct AlpSolution {
    LpStatus status = LpStatus::Numeric;
    VfaWeights weights;
    double objective = 0.0;
    double max_violation = 0.0;
    double max_guide_violation = 0.0;  // 0 when there are no self-guiding rows
    std::string message;

    bool ok() const { return status == LpStatus::Optimal; }
};

AlpSolution solve(const LpModel& model, SolverBackend& backend);
// Throws SolverError unless the model solved to optimality.
AlpSolution solve_or_throw(const LpModel& model, SolverBackend& backend);

}  // namespace falp
