#include "falp/adaptive_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace falp {

std::string to_string(ModelKind k) { return k == ModelKind::Falp ? "falp" : "fglp"; }

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "falp") return ModelKind::Falp;
    if (s == "fglp") return ModelKind::Fglp;
    throw std::invalid_argument("unknown model kind '" + s + "' (expected falp or fglp)");
}

std::string to_string(LbMode m) { return m == LbMode::VfaMean ? "vfa_mean" : "saddle"; }

LbMode lb_mode_from_string(const std::string& s) {
    if (s == "vfa_mean") return LbMode::VfaMean;
    if (s == "saddle") return LbMode::Saddle;
    throw std::invalid_argument("unknown lower-bound mode '" + s + "' (expected vfa_mean or saddle)");
}

std::string to_string(LoopStatus s) {
    switch (s) {
    case LoopStatus::Converged: return "converged";
    case LoopStatus::CapReached: return "cap_reached";
    case LoopStatus::SolverFailed: return "solver_failed";
    }
    return "?";
}

LoopResult run_loop(LoopDriver& driver, const LoopConfig& cfg, const IterationCallback& on_iteration) {
    if (cfg.batch < 1) throw std::invalid_argument("loop: batch must be >= 1");
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw std::invalid_argument("loop: tau must lie in (0, 1]");
    if (cfg.max_bases < cfg.batch) throw std::invalid_argument("loop: max_bases must be >= batch");

    LoopResult result;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t inc_lb = 0, inc_ub = 0;
    double inc_lb_value = kNaN, inc_pc_value = kNaN;
    std::size_t N = 0;

    for (std::size_t it = 1;; ++it) {
        N = driver.extend(cfg.batch);
        IterationEval ev;
        try {
            ev = driver.solve_and_evaluate();
        } catch (const SolverError& e) {
            result.status = LoopStatus::SolverFailed;
            result.error = e.what();
            return result;
        }

        if (inc_lb == 0 || ev.lb >= inc_lb_value) {
            inc_lb = it;
            inc_lb_value = ev.lb;
        }
        if (inc_ub == 0 || ev.pc <= inc_pc_value) {
            inc_ub = it;
            inc_pc_value = ev.pc;
        }

        IterationRecord r;
        r.iteration = it;
        r.N = N;
        r.lb = ev.lb;
        r.lb_vfa_mean = ev.lb_vfa_mean;
        r.lb_saddle = ev.lb_saddle;
        r.pc = ev.pc;
        r.pc_stderr = ev.pc_stderr;
        r.incumbent_lb = inc_lb;
        r.incumbent_ub = inc_ub;
        r.incumbent_lb_value = inc_lb_value;
        r.incumbent_pc_value = inc_pc_value;
        r.tau_star = 1.0 - inc_lb_value / inc_pc_value;
        r.objective = ev.objective;
        r.max_violation = ev.max_violation;
        r.max_guide_violation = ev.max_guide_violation;
        r.guide_min_change = ev.guide_min_change;
        r.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.push_back(r);
        if (on_iteration) on_iteration(r);

        if (cfg.stop_at_tolerance && r.tau_star <= cfg.tau) {
            result.status = LoopStatus::Converged;
            return result;
        }
        if (N + cfg.batch > cfg.max_bases) {
            result.status = r.tau_star <= cfg.tau ? LoopStatus::Converged : LoopStatus::CapReached;
            return result;
        }
    }
}

DiscountedDriver::DiscountedDriver(const DiscountedMdp& mdp, BasisSet bases, ConstraintSamplePlan plan,
                                   SolverBackend& backend, DiscountedDriverOptions opts)
    : mdp_(&mdp),
      bases_(std::move(bases)),
      data_(std::make_unique<AlpData>(mdp, std::move(plan))),
      backend_(&backend),
      opts_(std::move(opts)) {
    if (opts_.lb_mode == LbMode::Saddle && !opts_.constants)
        throw std::invalid_argument("saddle lower bound needs a constants function");
}

std::size_t DiscountedDriver::extend(std::size_t count) {
    if (opts_.extender)
        opts_.extender(bases_, count);
    else
        bases_.extend(count);
    return bases_.size();
}

IterationEval DiscountedDriver::solve_and_evaluate() {
    ++iteration_;
    if (opts_.redraw && iteration_ > 1) data_ = std::make_unique<AlpData>(*mdp_, opts_.redraw(iteration_));
    data_->sync(bases_);
    const std::size_t n = bases_.size();
    const VfaWeights* prev = history_.empty() ? nullptr : &history_.back();
    const LpModel model = opts_.model == ModelKind::Fglp ? data_->fglp(n, prev) : data_->falp(n);
    const AlpSolution sol = solve_or_throw(model, *backend_);

    IterationEval ev;
    ev.objective = sol.objective;
    ev.max_violation = sol.max_violation;
    ev.max_guide_violation = sol.max_guide_violation;
    if (prev) {
        const Vec now = data_->guide_values(sol.weights);
        const Vec before = data_->guide_values(*prev);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < now.size(); ++i) m = std::min(m, now[i] - before[i]);
        ev.guide_min_change = now.empty() ? kNaN : m;
    }

    const LinearVfa v(bases_, sol.weights);
    ev.lb_vfa_mean = chi_mean(*mdp_, v);
    if (opts_.lb_mode == LbMode::Saddle) {
        SaddleConfig sc = opts_.saddle;
        sc.seed = Rng::mix(opts_.saddle.seed + iteration_);
        saddle_history_.push_back(estimate_lower_bound(*mdp_, v, sc, opts_.constants(sol.weights)));
        ev.lb_saddle = saddle_history_.back().bound;
        ev.lb = ev.lb_saddle;
    } else {
        ev.lb = ev.lb_vfa_mean;
    }

    const PolicyCostEstimate pc =
        opts_.pc ? opts_.pc(bases_, sol.weights) : simulate_policy_cost(*mdp_, bases_, sol.weights, opts_.sim);
    ev.pc = pc.mean;
    ev.pc_stderr = pc.stderr_;
    history_.push_back(sol.weights);
    return ev;
}

FluctuationStats fluctuation_stats(const std::vector<double>& pc) {
    if (pc.size() < 2) throw std::invalid_argument("fluctuation_stats: need at least two iterations");
    std::size_t worse = 0;
    double total = 0.0;
    for (std::size_t i = 1; i < pc.size(); ++i) {
        if (pc[i] > pc[i - 1]) {
            ++worse;
            total += pc[i] - pc[i - 1];
        }
    }
    FluctuationStats st;
    st.fluctuation_pct = 100.0 * static_cast<double>(worse) / static_cast<double>(pc.size() - 1);
    st.fluctuation_magnitude = worse ? total / static_cast<double>(worse) : 0.0;
    return st;
}

FluctuationStats fluctuation_stats(const std::vector<IterationRecord>& trace) {
    std::vector<double> pc;
    pc.reserve(trace.size());
    for (const auto& r : trace) pc.push_back(r.pc);
    return fluctuation_stats(pc);
}

namespace {

const char* kTraceColumns =
    "iteration,N,lb,lb_vfa_mean,lb_saddle,pc,pc_stderr,tau_star,incumbent_lb,incumbent_ub,incumbent_lb_value,"
    "incumbent_pc_value,objective,max_violation,max_guide_violation,guide_min_change";

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "nan") return kNaN;
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trace: bad number '" + s + "'");
    return v;
}

nlohmann::json json_num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
    os << kTraceVersionLine << '\n' << kTraceColumns << '\n';
    for (const auto& r : trace) {
        os << r.iteration << ',' << r.N << ',' << num(r.lb) << ',' << num(r.lb_vfa_mean) << ',' << num(r.lb_saddle)
           << ',' << num(r.pc) << ',' << num(r.pc_stderr) << ',' << num(r.tau_star) << ',' << r.incumbent_lb << ','
           << r.incumbent_ub << ',' << num(r.incumbent_lb_value) << ',' << num(r.incumbent_pc_value) << ','
           << num(r.objective) << ',' << num(r.max_violation) << ',' << num(r.max_guide_violation) << ','
           << num(r.guide_min_change) << '\n';
    }
}

std::vector<IterationRecord> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTraceVersionLine) throw std::invalid_argument("trace: missing version line");
    if (!std::getline(is, line) || line != kTraceColumns) throw std::invalid_argument("trace: unexpected header");
    std::vector<IterationRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 16) throw std::invalid_argument("trace: expected 16 fields, got " + std::to_string(f.size()));
        IterationRecord r;
        r.iteration = std::stoul(f[0]);
        r.N = std::stoul(f[1]);
        r.lb = parse_num(f[2]);
        r.lb_vfa_mean = parse_num(f[3]);
        r.lb_saddle = parse_num(f[4]);
        r.pc = parse_num(f[5]);
        r.pc_stderr = parse_num(f[6]);
        r.tau_star = parse_num(f[7]);
        r.incumbent_lb = std::stoul(f[8]);
        r.incumbent_ub = std::stoul(f[9]);
        r.incumbent_lb_value = parse_num(f[10]);
        r.incumbent_pc_value = parse_num(f[11]);
        r.objective = parse_num(f[12]);
        r.max_violation = parse_num(f[13]);
        r.max_guide_violation = parse_num(f[14]);
        r.guide_min_change = parse_num(f[15]);
        out.push_back(r);
    }
    return out;
}

nlohmann::json to_json(const IterationRecord& r) {
    return {{"iteration", r.iteration},
            {"N", r.N},
            {"lb", json_num(r.lb)},
            {"lb_vfa_mean", json_num(r.lb_vfa_mean)},
            {"lb_saddle", json_num(r.lb_saddle)},
            {"pc", json_num(r.pc)},
            {"pc_stderr", json_num(r.pc_stderr)},
            {"tau_star", json_num(r.tau_star)},
            {"wallclock", r.wallclock},
            {"incumbent_lb", r.incumbent_lb},
            {"incumbent_ub", r.incumbent_ub},
            {"incumbent_lb_value", json_num(r.incumbent_lb_value)},
            {"incumbent_pc_value", json_num(r.incumbent_pc_value)},
            {"objective", json_num(r.objective)},
            {"max_violation", json_num(r.max_violation)},
            {"max_guide_violation", json_num(r.max_guide_violation)},
            {"guide_min_change", json_num(r.guide_min_change)}};
}

nlohmann::json trace_to_json(const std::vector<IterationRecord>& trace) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : trace) a.push_back(to_json(r));
    return {{"version", 1}, {"iterations", a}};
}

}  // namespace falp
