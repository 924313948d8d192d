#include "falp/alp.hpp"

#include <algorithm>

namespace falp {

ConstraintSamplePlan ConstraintSamplePlan::uniform(const DiscountedMdp& mdp, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("constraint sample plan: n must be positive");
    ConstraintSamplePlan plan;
    plan.states.reserve(n);
    plan.actions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        plan.states.push_back(mdp.state_box.sample(rng));
        plan.actions.push_back(mdp.action_box.sample(rng));
    }
    plan.guide_states = plan.states;
    return plan;
}

ConstraintSamplePlan ConstraintSamplePlan::product(const std::vector<Vec>& state_grid, const std::vector<Vec>& action_grid) {
    ConstraintSamplePlan plan;
    plan.states.reserve(state_grid.size() * action_grid.size());
    plan.actions.reserve(state_grid.size() * action_grid.size());
    for (const auto& s : state_grid)
        for (const auto& a : action_grid) {
            plan.states.push_back(s);
            plan.actions.push_back(a);
        }
    plan.guide_states = state_grid;
    return plan;
}

AlpData::AlpData(const DiscountedMdp& mdp, ConstraintSamplePlan plan) : mdp_(&mdp), plan_(std::move(plan)) {
    if (plan_.size() == 0) throw std::invalid_argument("constraint sample plan is empty");
    if (plan_.states.size() != plan_.actions.size()) throw std::invalid_argument("plan states and actions differ in length");
    cost_.resize(plan_.size());
    for (std::size_t r = 0; r < plan_.size(); ++r) {
        mdp.check_pair(plan_.states[r], plan_.actions[r]);
        cost_[r] = mdp.expected_cost(plan_.states[r], plan_.actions[r]);
    }
}

void AlpData::sync(const BasisSet& bases) {
    const std::size_t first = phi_.size();
    const std::size_t last = bases.size();
    if (last <= first) return;
    const std::size_t add = last - first;
    const std::size_t rows = plan_.size();
    for (std::size_t i = 0; i < add; ++i) {
        phi_.emplace_back(rows);
        next_phi_.emplace_back(rows);
        guide_phi_.emplace_back(plan_.guide_states.size());
    }
    Vec buf(last), nbuf(add);
    for (std::size_t r = 0; r < rows; ++r) {
        bases.eval_all(plan_.states[r], last, buf.data());
        expected_features(*mdp_, bases, plan_.states[r], plan_.actions[r], first, last, nbuf.data());
        for (std::size_t i = 0; i < add; ++i) {
            phi_[first + i][r] = buf[first + i];
            next_phi_[first + i][r] = nbuf[i];
        }
    }
    for (std::size_t g = 0; g < plan_.guide_states.size(); ++g) {
        bases.eval_all(plan_.guide_states[g], last, buf.data());
        for (std::size_t i = 0; i < add; ++i) guide_phi_[first + i][g] = buf[first + i];
    }
    const auto& nu = mdp_->relevance;
    for (std::size_t i = first; i < last; ++i) nu_mean_.push_back(0.0);
    for (std::size_t k = 0; k < nu.atoms.size(); ++k) {
        bases.eval_all(nu.atoms[k], last, buf.data());
        for (std::size_t i = first; i < last; ++i) nu_mean_[i] += nu.weights[k] * buf[i];
    }
}

void AlpData::add_standard_rows(LpModel& model, std::size_t n) const {
    const double g = mdp_->gamma;
    std::vector<double> row(n + 1);
    for (std::size_t r = 0; r < plan_.size(); ++r) {
        row[0] = 1.0 - g;
        for (std::size_t i = 0; i < n; ++i) row[i + 1] = phi_[i][r] - g * next_phi_[i][r];
        model.add_row(row.data(), cost_[r], RowTag::Standard);
    }
}

LpModel AlpData::falp(std::size_t n) const { return fglp(n, nullptr); }

LpModel AlpData::fglp(std::size_t n, const VfaWeights* prev) const {
    if (n > phi_.size()) throw std::invalid_argument("model requests more bases than are cached");
    if (prev && prev->betas.size() > n) throw std::invalid_argument("previous weights longer than the basis set");
    LpModel model(n + 1);
    model.objective()[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) model.objective()[i + 1] = nu_mean_[i];
    model.reserve(plan_.size() + (prev ? plan_.guide_states.size() : 0));
    add_standard_rows(model, n);
    if (prev) {
        const Vec vprev = guide_values(*prev);
        std::vector<double> row(n + 1);
        for (std::size_t gi = 0; gi < plan_.guide_states.size(); ++gi) {
            row[0] = -1.0;
            for (std::size_t i = 0; i < n; ++i) row[i + 1] = -guide_phi_[i][gi];
            model.add_row(row.data(), -vprev[gi], RowTag::SelfGuiding);
        }
    }
    return model;
}

Vec AlpData::guide_values(const VfaWeights& w) const {
    if (w.betas.size() > phi_.size()) throw std::invalid_argument("weights longer than cached bases");
    Vec v(plan_.guide_states.size(), w.beta0);
    for (std::size_t i = 0; i < w.betas.size(); ++i)
        for (std::size_t gi = 0; gi < v.size(); ++gi) v[gi] += w.betas[i] * guide_phi_[i][gi];
    return v;
}

LpModel build_falp(const DiscountedMdp& mdp, const BasisSet& bases, const ConstraintSamplePlan& plan) {
    return build_fglp(mdp, bases, plan, nullptr);
}

LpModel build_fglp(const DiscountedMdp& mdp, const BasisSet& bases, const ConstraintSamplePlan& plan,
                   const VfaWeights* prev) {
    if (bases.size() == 0) throw std::invalid_argument("basis set is empty");
    if (prev && prev->betas.size() > bases.size()) throw std::invalid_argument("previous weights longer than the basis set");
    AlpData data(mdp, plan);
    data.sync(bases);
    return data.fglp(bases.size(), prev);
}

namespace {

// The intercept enters every standard row with coefficient 1 - gamma > 0, so
// lowering it removes any rounding-level violation of those rows. The next
// self-guiding model then starts from an exactly feasible point.
void restore_feasibility(const LpModel& model, LpSolution& lp) {
    if (lp.x.empty()) return;
    double shift = 0.0;
    for (std::size_t i = 0; i < model.num_rows(); ++i) {
        if (model.tag(i) != RowTag::Standard) continue;
        const double* row = model.row(i);
        if (!(row[0] > 0.0)) return;
        double lhs = 0.0;
        for (std::size_t j = 0; j < model.num_vars(); ++j) lhs += row[j] * lp.x[j];
        shift = std::max(shift, (lhs - model.rhs(i)) / row[0]);
    }
    if (shift <= 0.0) return;
    lp.x[0] -= shift;
    lp.objective -= model.objective()[0] * shift;
    lp.max_violation = model.max_violation(lp.x);
}

}  // namespace

AlpSolution solve(const LpModel& model, SolverBackend& backend) {
    LpSolution lp = backend.solve(model);
    AlpSolution out;
    out.status = lp.status;
    out.message = lp.message;
    if (lp.status != LpStatus::Optimal) return out;
    restore_feasibility(model, lp);
    out.weights.beta0 = lp.x.at(0);
    out.weights.betas.assign(lp.x.begin() + 1, lp.x.end());
    out.objective = lp.objective;
    out.max_violation = lp.max_violation;
    const RowTag guide = RowTag::SelfGuiding;
    out.max_guide_violation = model.count(guide) ? std::max(0.0, model.max_violation(lp.x, &guide)) : 0.0;
    return out;
}

AlpSolution solve_or_throw(const LpModel& model, SolverBackend& backend) {
    AlpSolution s = solve(model, backend);
    if (!s.ok()) throw SolverError(s.status, "LP solve failed: " + to_string(s.status) + (s.message.empty() ? "" : " (" + s.message + ")"));
    return s;
}

}  // namespace falp
