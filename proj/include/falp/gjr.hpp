#pragma once

#include "falp/adaptive_loop.hpp"
#include "falp/bases.hpp"
#include "falp/lp.hpp"
#include "falp/mdp.hpp"
#include "falp/rng.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace falp {

enum class SbarScheme { Random, Constant, Discrete };
std::string to_string(SbarScheme s);
SbarScheme sbar_scheme_from_string(const std::string& s);

struct GjrSpec {
    std::size_t J = 2;
    SbarScheme scheme = SbarScheme::Constant;
    int z = 100;  // percent, one of 50, 60, 67, 75, 80, 100
    double c_prime = 100.0;
    // Draws that may be pinned instead of sampled.
    std::optional<Vec> lambda;  // U[0,10]
    std::optional<Vec> u;       // U[0,1]
    std::optional<Vec> alpha;   // uniform over {2,4,8}
    std::optional<Vec> c_item;  // U[0,60]
};

struct GjrParams {
    std::size_t J = 0;
    Vec lambda;
    Vec s_bar;
    double a_bar = 0.0;
    double c_prime = 0.0;
    Vec c_item;  // c''_j
    Vec h;       // holding cost rates, zero for generated instances
};

GjrParams gjr_instance(const GjrSpec& spec, Rng& rng);
void validate(const GjrParams& p);

nlohmann::json to_json(const GjrSpec& s);
GjrSpec gjr_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GjrParams& p);
GjrParams gjr_params_from_json(const nlohmann::json& j);

constexpr double kGjrTol = 1e-9;

bool gjr_state_valid(const GjrParams& p, const Vec& s);
// s + a <= s_bar, sum a <= a_bar, a >= 0, and T(s, a) > 0.
bool gjr_feasible(const GjrParams& p, const Vec& s, const Vec& a);
double gjr_time(const GjrParams& p, const Vec& s, const Vec& a);

struct GjrStep {
    double T = 0.0;
    Vec next;
};
// Throws std::domain_error for infeasible actions.
GjrStep gjr_step(const GjrParams& p, const Vec& s, const Vec& a);
double gjr_cost(const GjrParams& p, const Vec& s, const Vec& a);
SemiMdp gjr_semi_mdp(const GjrParams& p);

// Stumps with one sigma drawn from [1, max_j s_bar_j].
BasisSet gjr_bases(const GjrParams& p, std::uint64_t seed);

struct BiasApprox {
    double eta_hat = 0.0;
    double beta0 = 0.0;
    Vec beta1;  // J
    Vec beta2;  // N

    // eta_hat + sum_j beta1_j lambda_j
    double eta(const GjrParams& p) const;
    // beta0 - sum_j beta1_j s_j - sum_i beta2_i phi_i(s)
    double u(const BasisSet& bases, const Vec& s) const;
};

nlohmann::json to_json(const BiasApprox& b);
BiasApprox bias_approx_from_json(const nlohmann::json& j);

struct StateAction {
    Vec s;
    Vec a;
};

// Variables are ordered (eta_hat, beta0, beta1[J], beta2[N]). beta0 is pinned
// to zero by two Bound rows. Guide rows are added when prev is given.
LpModel build_avg_alp(const GjrParams& p, const BasisSet& bases, const std::vector<StateAction>& pairs,
                      const BiasApprox* prev = nullptr, const std::vector<Vec>& guide_states = {});
BiasApprox bias_from_solution(const GjrParams& p, std::size_t n_bases, const Vec& x);

// c(s,a) - eta_hat T - sum_j beta1_j a_j - sum_i beta2_i (phi_i(s') - phi_i(s))
double avg_slack(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const Vec& s, const Vec& a);

struct SearchPlan {
    std::size_t grid = 50;       // points per coordinate, k s_bar_j / (grid - 1)
    std::size_t refine_top = 5;  // grid points refined by coordinate search
    double sep_tol = -1.0;       // < 0: 1e-6 (1 + |c'|)
    std::size_t threads = 1;
};

struct SeparationResult {
    StateAction pair;
    double slack = 0.0;
    bool violated = false;
};

SeparationResult separate(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const SearchPlan& plan = {});

// Uniform feasible pairs: one stocked-out item, the rest uniform; stocked-out
// items are always replenished, others with probability 1/2.
std::vector<StateAction> sample_gjr_pairs(const GjrParams& p, std::size_t count, Rng& rng);
std::vector<Vec> sample_gjr_states(const GjrParams& p, std::size_t count, Rng& rng);

struct CgTraceRow {
    std::size_t iteration = 0;
    double lp_objective = 0.0;
    double slack = 0.0;
    bool trust_box = false;
};

struct CgConfig {
    std::size_t max_cuts = 500;
    SearchPlan search;
    double trust_box = 1e6;  // used only when the LP is unbounded
};

struct CgResult {
    BiasApprox solution;
    double lower_bound = 0.0;  // eta(lambda)
    std::size_t cuts = 0;
    std::size_t lp_solves = 0;
    bool trust_box = false;
    std::vector<CgTraceRow> trace;
    std::vector<StateAction> pairs;    // final constraint set
    std::vector<Vec> separated_states;  // states of the added cuts
};

class CgCapExceeded : public std::runtime_error {
public:
    CgCapExceeded(const std::string& what, std::vector<CgTraceRow> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<CgTraceRow>& trace() const { return trace_; }

private:
    std::vector<CgTraceRow> trace_;
};

CgResult constraint_generation(const GjrParams& p, const BasisSet& bases, std::vector<StateAction> init_pairs,
                               SolverBackend& backend, const BiasApprox* prev = nullptr,
                               const std::vector<Vec>& guide_states = {}, const CgConfig& cfg = {});

void write_cg_trace_csv(std::ostream& os, const std::vector<CgTraceRow>& trace);

// Actions with a_j = k (s_bar_j - s_j) / (points - 1), k = 0..points-1, that
// are feasible at s.
std::vector<Vec> gjr_action_grid(const GjrParams& p, const Vec& s, std::size_t points);

struct GreedyConfig {
    std::size_t K = 4;
    std::size_t action_points = 21;
    std::size_t beam = 20;  // used when K > 2
};

struct KStepResult {
    Vec action;
    double objective = 0.0;
};

// First action of the K-step plan minimizing sum (c - eta T) + u(s_K).
// K <= 2 enumerates every grid plan; larger K uses beam search.
KStepResult k_step_greedy(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const Vec& s,
                          const GreedyConfig& cfg = {});

// Stocked out in item 1, every other item at half its limit.
Vec gjr_start_state(const GjrParams& p);

struct AverageCostEstimate {
    double average_cost = 0.0;
    double total_cost = 0.0;
    double total_time = 0.0;
    std::size_t stages = 0;
};

AverageCostEstimate simulate_average_cost(const GjrParams& p, const BasisSet& bases, const BiasApprox& w,
                                          std::size_t stages, const GreedyConfig& cfg = {},
                                          const Vec* start = nullptr);

struct GjrDriverOptions {
    ModelKind model = ModelKind::Falp;
    CgConfig cg;
    GreedyConfig greedy;
    std::size_t sim_stages = 4000;
    std::size_t init_pairs = 200;
    std::size_t guide_states = 5000;
    std::uint64_t seed = 1;
};

// Algorithm 1 over the average-cost models: LB = eta(lambda), PC = simulated
// K-step greedy average cost.
class GjrDriver : public LoopDriver {
public:
    GjrDriver(const GjrParams& p, BasisSet bases, SolverBackend& backend, GjrDriverOptions opts);

    std::size_t extend(std::size_t count) override;
    IterationEval solve_and_evaluate() override;

    const BasisSet& bases() const { return bases_; }
    const std::vector<BiasApprox>& history() const { return history_; }
    const std::vector<CgResult>& cg_runs() const { return runs_; }

private:
    GjrParams p_;
    BasisSet bases_;
    SolverBackend* backend_;
    GjrDriverOptions opts_;
    std::vector<StateAction> pairs_;
    std::vector<Vec> guides_;
    std::vector<BiasApprox> history_;
    std::vector<CgResult> runs_;
};

}  // namespace falp
