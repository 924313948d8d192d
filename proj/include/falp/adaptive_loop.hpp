#pragma once

#include "falp/alp.hpp"
#include "falp/bases.hpp"
#include "falp/lower_bound.hpp"
#include "falp/lp.hpp"
#include "falp/mdp.hpp"
#include "falp/policy.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace falp {

enum class ModelKind { Falp, Fglp };
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Which value drives Algorithm 1's LB comparisons.
enum class LbMode { VfaMean, Saddle };
std::string to_string(LbMode m);
LbMode lb_mode_from_string(const std::string& s);

struct LoopConfig {
    std::size_t batch = 1;
    double tau = 0.05;
    std::size_t max_bases = 200;
    ModelKind model = ModelKind::Falp;
    // false: run to max_bases regardless of tau (fixed-budget traces)
    bool stop_at_tolerance = true;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based
    std::size_t N = 0;
    double lb = kNaN;           // value used by the loop
    double lb_vfa_mean = kNaN;  // E_chi[V]
    double lb_saddle = kNaN;
    double pc = kNaN;
    double pc_stderr = 0.0;
    double tau_star = kNaN;
    double wallclock = 0.0;  // seconds since loop start
    std::size_t incumbent_lb = 0;  // iteration holding beta^LB
    std::size_t incumbent_ub = 0;  // iteration holding beta^UB
    double incumbent_lb_value = kNaN;
    double incumbent_pc_value = kNaN;
    double objective = kNaN;
    double max_violation = 0.0;
    double max_guide_violation = 0.0;
    // min over guide states of V(s; beta_n) - V(s; beta_(n-1)); NaN on the first iteration
    double guide_min_change = kNaN;
};

// What one iteration of the loop produces before incumbent bookkeeping.
struct IterationEval {
    double lb = kNaN;
    double lb_vfa_mean = kNaN;
    double lb_saddle = kNaN;
    double pc = kNaN;
    double pc_stderr = 0.0;
    double objective = kNaN;
    double max_violation = 0.0;
    double max_guide_violation = 0.0;
    double guide_min_change = kNaN;
};

// Problem-specific steps (i)-(iii) of the loop.
class LoopDriver {
public:
    virtual ~LoopDriver() = default;
    // Grow the basis set by `count`; returns the new N.
    virtual std::size_t extend(std::size_t count) = 0;
    // Solve at the current N and evaluate; throws SolverError on LP failure.
    virtual IterationEval solve_and_evaluate() = 0;
};

enum class LoopStatus { Converged, CapReached, SolverFailed };
std::string to_string(LoopStatus s);

struct LoopResult {
    LoopStatus status = LoopStatus::CapReached;
    std::vector<IterationRecord> trace;
    std::string error;  // set when status is SolverFailed
};

using IterationCallback = std::function<void(const IterationRecord&)>;

LoopResult run_loop(LoopDriver& driver, const LoopConfig& cfg, const IterationCallback& on_iteration = {});

using PcEvaluator = std::function<PolicyCostEstimate(const BasisSet&, const VfaWeights&)>;
using BasisExtender = std::function<void(BasisSet&, std::size_t count)>;
using ConstantsFn = std::function<LipschitzConstants(const VfaWeights&)>;

struct DiscountedDriverOptions {
    ModelKind model = ModelKind::Falp;
    LbMode lb_mode = LbMode::VfaMean;
    SaddleConfig saddle;
    ConstantsFn constants;          // required for LbMode::Saddle
    PcEvaluator pc;                 // default: simulate_policy_cost with `sim`
    SimConfig sim;
    BasisExtender extender;         // default: BasisSet::extend
    // Redraw the constraint plan every iteration from this generator.
    std::function<ConstraintSamplePlan(std::size_t iteration)> redraw;
};

class DiscountedDriver : public LoopDriver {
public:
    DiscountedDriver(const DiscountedMdp& mdp, BasisSet bases, ConstraintSamplePlan plan, SolverBackend& backend,
                     DiscountedDriverOptions opts);

    std::size_t extend(std::size_t count) override;
    IterationEval solve_and_evaluate() override;

    const BasisSet& bases() const { return bases_; }
    // Weights from every solved iteration, in order.
    const std::vector<VfaWeights>& history() const { return history_; }
    // Saddle estimates per iteration (empty unless LbMode::Saddle).
    const std::vector<LowerBoundEstimate>& saddle_history() const { return saddle_history_; }

private:
    const DiscountedMdp* mdp_;
    BasisSet bases_;
    std::unique_ptr<AlpData> data_;
    SolverBackend* backend_;
    DiscountedDriverOptions opts_;
    std::vector<VfaWeights> history_;
    std::vector<LowerBoundEstimate> saddle_history_;
    std::size_t iteration_ = 0;
};

struct FluctuationStats {
    double fluctuation_pct = 0.0;
    double fluctuation_magnitude = 0.0;
};

// Over consecutive raw policy costs: share of comparisons where cost went up,
// and the mean increase over those comparisons.
FluctuationStats fluctuation_stats(const std::vector<double>& pc);
FluctuationStats fluctuation_stats(const std::vector<IterationRecord>& trace);

inline constexpr const char* kTraceVersionLine = "# trace v1";
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace);
std::vector<IterationRecord> read_trace_csv(std::istream& is);
nlohmann::json to_json(const IterationRecord& r);
nlohmann::json trace_to_json(const std::vector<IterationRecord>& trace);

}  // namespace falp
