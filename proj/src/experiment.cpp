#include "falp/experiment.hpp"

#include "falp/pic.hpp"
#include "falp/toy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace falp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunConfig::problem_name() const {
    switch (problem) {
    case ProblemKind::Toy: return "toy";
    case ProblemKind::Pic: return "pic:" + std::to_string(pic_id);
    case ProblemKind::Gjr: return "gjr";
    }
    return "?";
}

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected a JSON object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return read<T>(key);
    }

    template <class T>
    T require(const std::string& key) {
        if (!has(key)) throw ConfigError(name(key), "required field is missing");
        return read<T>(key);
    }

    const json& object(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish(const std::set<std::string>& extra = {}) const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k) && !extra.count(k)) throw ConfigError(name(k), "unknown field");
    }

private:
    template <class T>
    T read(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(name(key), "has the wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class T>
void check(bool ok, const std::string& where, const T& msg) {
    if (!ok) throw ConfigError(where, msg);
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) { return Rng(seed).split(stream).next_u64(); }

enum : std::uint64_t {
    kBasesStream = 1,
    kDemandStream = 2,
    kPlanStream = 3,
    kRolloutStream = 4,
    kSaddleStream = 5,
    kInstanceStream = 6,
    kGjrStream = 7
};

void parse_problem(RunConfig& c, const std::string& s) {
    if (s == "toy") {
        c.problem = ProblemKind::Toy;
    } else if (s.rfind("pic:", 0) == 0) {
        c.problem = ProblemKind::Pic;
        try {
            std::size_t pos = 0;
            c.pic_id = std::stoi(s.substr(4), &pos);
            if (pos != s.size() - 4) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("problem", "expected pic:<id>");
        }
        check(c.pic_id >= 1 && c.pic_id <= kPicInstances, "problem", "PIC instance id must be in 1..16");
    } else if (s == "gjr" || s.rfind("gjr:", 0) == 0) {
        c.problem = ProblemKind::Gjr;
        if (s.size() > 3) {
            std::stringstream ss(s.substr(4));
            std::string J, scheme, z;
            if (!std::getline(ss, J, ':') || !std::getline(ss, scheme, ':') || !std::getline(ss, z))
                throw ConfigError("problem", "expected gjr:<J>:<scheme>:<z>");
            try {
                c.gjr.J = std::stoul(J);
                c.gjr.scheme = sbar_scheme_from_string(scheme);
                c.gjr.z = std::stoi(z);
            } catch (const std::exception& e) {
                throw ConfigError("problem", e.what());
            }
        }
    } else {
        throw ConfigError("problem", "expected toy, pic:<id> or gjr[:<J>:<scheme>:<z>]");
    }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    RunConfig c;
    Fields f(j, "");
    parse_problem(c, f.require<std::string>("problem"));
    try {
        c.model = model_kind_from_string(f.get<std::string>("model", "falp"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model", e.what());
    }
    c.seed = f.get<std::uint64_t>("seed", 1);
    c.output_dir = f.require<std::string>("output_dir");
    check(!c.output_dir.empty(), "output_dir", "must not be empty");
    c.threads = f.get<std::size_t>("threads", 1);
    check(c.threads >= 1, "threads", "must be >= 1");

    const bool toy = c.problem == ProblemKind::Toy, pic = c.problem == ProblemKind::Pic;
    c.loop.model = c.model;
    if (f.has("loop")) {
        Fields l(f.object("loop"), "loop");
        c.loop.batch = l.get<std::size_t>("batch", c.loop.batch);
        c.loop.tau = l.get<double>("tau", c.loop.tau);
        c.loop.max_bases = l.get<std::size_t>("max_bases", c.loop.max_bases);
        c.loop.stop_at_tolerance = l.get<bool>("stop_at_tolerance", true);
        l.finish();
    }
    check(c.loop.batch >= 1, "loop.batch", "must be >= 1");
    check(c.loop.tau > 0 && c.loop.tau <= 1, "loop.tau", "must lie in (0, 1]");
    check(c.loop.max_bases >= c.loop.batch, "loop.max_bases", "must be >= loop.batch");

    c.sigma_lo = toy ? 0.1 : 100.0;
    c.sigma_hi = toy ? 1.0 : 1000.0;
    if (f.has("bases")) {
        Fields b(f.object("bases"), "bases");
        if (b.has("sigma_range")) {
            const auto r = b.require<std::vector<double>>("sigma_range");
            check(r.size() == 2 && r[0] > 0 && r[1] >= r[0], "bases.sigma_range", "expected [lo, hi] with 0 < lo <= hi");
            c.sigma_lo = r[0];
            c.sigma_hi = r[1];
        }
        c.thetas = b.get<std::vector<double>>("thetas", {});
        check(c.thetas.empty() || toy, "bases.thetas", "preset frequencies are only supported for the toy problem");
        b.finish();
    }

    if (f.has("constraints")) {
        Fields k(f.object("constraints"), "constraints");
        c.constraints = k.get<std::size_t>("count", c.constraints);
        c.redraw_constraints = k.get<bool>("redraw", false);
        k.finish();
    }
    check(c.constraints >= 1, "constraints.count", "must be >= 1");
    c.saa = f.get<std::size_t>("saa", c.saa);
    check(c.saa >= 1, "saa", "must be >= 1");

    c.sim.threads = c.threads;
    c.sim.action_grid = toy ? kToyActionGrid : pic ? static_cast<std::size_t>(instance_from_table(c.pic_id).a_max) + 1 : 0;
    if (f.has("sim")) {
        Fields s(f.object("sim"), "sim");
        c.sim.horizon = s.get<std::size_t>("horizon", 0);
        c.sim.replications = s.get<std::size_t>("replications", c.sim.replications);
        c.sim.action_grid = s.get<std::size_t>("action_grid", c.sim.action_grid);
        if (s.has("rollout_seed")) {
            c.sim.rollout_seed = s.require<std::uint64_t>("rollout_seed");
            c.rollout_seed_set = true;
        }
        c.toy_analytic_pc = s.get<bool>("toy_analytic", true);
        s.finish();
    }
    if (!c.rollout_seed_set) c.sim.rollout_seed = derived_seed(c.seed, kRolloutStream);
    check(c.sim.replications >= 1, "sim.replications", "must be >= 1");
    check(c.problem == ProblemKind::Gjr || c.sim.action_grid >= 2, "sim.action_grid", "must be >= 2");

    c.lb_mode = pic ? LbMode::Saddle : LbMode::VfaMean;
    c.saddle.threads = c.threads;
    if (f.has("lower_bound")) {
        Fields l(f.object("lower_bound"), "lower_bound");
        try {
            c.lb_mode = lb_mode_from_string(l.get<std::string>("mode", to_string(c.lb_mode)));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("lower_bound.mode", e.what());
        }
        c.saddle.chains = l.get<std::size_t>("chains", c.saddle.chains);
        c.saddle.chain_length = l.get<std::size_t>("chain_length", c.saddle.chain_length);
        c.saddle.burn_in = l.get<std::size_t>("burn_in", c.saddle.burn_in);
        c.saddle.lambda = l.get<double>("lambda", 0.0);
        c.saddle.step_fraction = l.get<double>("step_fraction", c.saddle.step_fraction);
        if (l.has("seed")) {
            c.saddle.seed = l.require<std::uint64_t>("seed");
            c.saddle_seed_set = true;
        }
        l.finish();
    }
    if (!c.saddle_seed_set) c.saddle.seed = derived_seed(c.seed, kSaddleStream);
    check(c.lb_mode != LbMode::Saddle || pic, "lower_bound.mode", "saddle bounds need Lipschitz constants (pic only)");
    check(c.saddle.chains >= 1, "lower_bound.chains", "must be >= 1");
    check(c.saddle.burn_in < c.saddle.chain_length, "lower_bound.burn_in", "must be < chain_length");
    check(c.saddle.lambda >= 0 && c.saddle.lambda <= 1, "lower_bound.lambda", "must be 0 (default) or in (0, 1]");
    check(c.saddle.step_fraction > 0, "lower_bound.step_fraction", "must be positive");

    c.visit_bins = f.get<std::size_t>("visit_bins", toy ? 100 : pic ? 10 : 0);
    check(c.problem == ProblemKind::Gjr || c.visit_bins >= 1, "visit_bins", "must be >= 1");

    c.gjr_opts.model = c.model;
    c.gjr_opts.cg.search.threads = c.threads;
    if (f.has("gjr")) {
        check(c.problem == ProblemKind::Gjr, "gjr", "only valid with problem gjr");
        Fields g(f.object("gjr"), "gjr");
        c.gjr.J = g.get<std::size_t>("J", c.gjr.J);
        if (g.has("scheme")) {
            try {
                c.gjr.scheme = sbar_scheme_from_string(g.require<std::string>("scheme"));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("gjr.scheme", e.what());
            }
        }
        c.gjr.z = g.get<int>("z", c.gjr.z);
        c.gjr.c_prime = g.get<double>("c_prime", c.gjr.c_prime);
        for (const char* key : {"lambda", "u", "alpha", "c_item"}) {
            if (!g.has(key)) continue;
            auto v = g.require<std::vector<double>>(key);
            std::optional<Vec>& slot = std::string(key) == "lambda" ? c.gjr.lambda
                                       : std::string(key) == "u"    ? c.gjr.u
                                       : std::string(key) == "alpha" ? c.gjr.alpha
                                                                     : c.gjr.c_item;
            slot = std::move(v);
        }
        c.gjr_opts.greedy.K = g.get<std::size_t>("K", c.gjr_opts.greedy.K);
        c.gjr_opts.greedy.action_points = g.get<std::size_t>("action_points", c.gjr_opts.greedy.action_points);
        c.gjr_opts.greedy.beam = g.get<std::size_t>("beam", c.gjr_opts.greedy.beam);
        c.gjr_opts.sim_stages = g.get<std::size_t>("stages", c.gjr_opts.sim_stages);
        c.gjr_opts.init_pairs = g.get<std::size_t>("init_pairs", c.gjr_opts.init_pairs);
        c.gjr_opts.guide_states = g.get<std::size_t>("guide_states", c.gjr_opts.guide_states);
        c.gjr_opts.cg.search.grid = g.get<std::size_t>("grid", c.gjr_opts.cg.search.grid);
        c.gjr_opts.cg.search.refine_top = g.get<std::size_t>("refine_top", c.gjr_opts.cg.search.refine_top);
        c.gjr_opts.cg.max_cuts = g.get<std::size_t>("max_cuts", c.gjr_opts.cg.max_cuts);
        g.finish();
    }
    if (c.problem == ProblemKind::Gjr) {
        check(c.gjr.J >= 2, "gjr.J", "must be >= 2");
        check(c.gjr_opts.greedy.K >= 1, "gjr.K", "must be >= 1");
        check(c.gjr_opts.greedy.action_points >= 2, "gjr.action_points", "must be >= 2");
        check(c.gjr_opts.sim_stages >= 1, "gjr.stages", "must be >= 1");
        check(c.gjr_opts.init_pairs >= 1, "gjr.init_pairs", "must be >= 1");
        check(c.gjr_opts.cg.search.grid >= 2, "gjr.grid", "must be >= 2");
        try {
            Rng r(0);
            (void)gjr_instance(c.gjr, r);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("gjr", e.what());
        }
    }
    c.gjr_opts.seed = derived_seed(c.seed, kGjrStream);
    f.finish({"run_info"});
    return c;
}

RunConfig parse_run_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ConfigError("line " + std::to_string(line), "JSON syntax error");
    }
    return parse_run_config(j);
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

json to_json(const RunConfig& c) {
    std::string problem = c.problem_name();
    json j = {{"problem", problem},
              {"model", to_string(c.model)},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"threads", c.threads},
              {"loop",
               {{"batch", c.loop.batch},
                {"tau", c.loop.tau},
                {"max_bases", c.loop.max_bases},
                {"stop_at_tolerance", c.loop.stop_at_tolerance}}},
              {"bases", {{"sigma_range", {c.sigma_lo, c.sigma_hi}}}},
              {"constraints", {{"count", c.constraints}, {"redraw", c.redraw_constraints}}},
              {"saa", c.saa},
              {"sim",
               {{"horizon", c.sim.horizon},
                {"replications", c.sim.replications},
                {"action_grid", c.sim.action_grid},
                {"rollout_seed", c.sim.rollout_seed},
                {"toy_analytic", c.toy_analytic_pc}}},
              {"lower_bound",
               {{"mode", to_string(c.lb_mode)},
                {"chains", c.saddle.chains},
                {"chain_length", c.saddle.chain_length},
                {"burn_in", c.saddle.burn_in},
                {"lambda", c.saddle.lambda},
                {"step_fraction", c.saddle.step_fraction},
                {"seed", c.saddle.seed}}},
              {"visit_bins", c.visit_bins}};
    if (!c.thetas.empty()) j["bases"]["thetas"] = c.thetas;
    if (c.problem == ProblemKind::Gjr) {
        json g = to_json(c.gjr);
        g["K"] = c.gjr_opts.greedy.K;
        g["action_points"] = c.gjr_opts.greedy.action_points;
        g["beam"] = c.gjr_opts.greedy.beam;
        g["stages"] = c.gjr_opts.sim_stages;
        g["init_pairs"] = c.gjr_opts.init_pairs;
        g["guide_states"] = c.gjr_opts.guide_states;
        g["grid"] = c.gjr_opts.cg.search.grid;
        g["refine_top"] = c.gjr_opts.cg.search.refine_top;
        g["max_cuts"] = c.gjr_opts.cg.max_cuts;
        j["gjr"] = g;
    }
    return j;
}

namespace {

std::string timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

fs::path fresh_run_dir(const RunConfig& c) {
    std::string base = c.problem_name();
    std::replace(base.begin(), base.end(), ':', '-');
    base += "-" + to_string(c.model) + "-" + timestamp();
    fs::create_directories(c.output_dir);
    for (int k = 1;; ++k) {
        const fs::path dir = fs::path(c.output_dir) / (k == 1 ? base : base + "-" + std::to_string(k));
        if (fs::create_directory(dir)) return dir;
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << std::setw(2) << j << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string join_coords(const Vec& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
    return os.str();
}

void write_visit_csv(const fs::path& path, const VisitHistogram& h) {
    std::ofstream out(path);
    out << "bin,center,mass\n";
    out.precision(17);
    const auto mass = h.normalized();
    const std::size_t d = h.box.dim();
    for (std::size_t cell = 0; cell < mass.size(); ++cell) {
        Vec center(d);
        std::size_t rem = cell;
        for (std::size_t k = d; k-- > 0;) {
            const std::size_t b = rem % h.bins;
            rem /= h.bins;
            const double w = (h.box.hi[k] - h.box.lo[k]) / static_cast<double>(h.bins);
            center[k] = h.box.lo[k] + (static_cast<double>(b) + 0.5) * w;
        }
        out << cell << ',' << join_coords(center) << ',' << mass[cell] << '\n';
    }
}

json bounds_json(const RunConfig& c, const LoopResult& res) {
    json b = {{"version", 1}, {"problem", c.problem_name()}, {"model", to_string(c.model)},
              {"status", to_string(res.status)}, {"iterations", res.trace.size()}};
    if (!res.error.empty()) b["error"] = res.error;
    if (!res.trace.empty()) {
        const auto& r = res.trace.back();
        b["N"] = r.N;
        b["lb"] = r.incumbent_lb_value;
        b["pc"] = r.incumbent_pc_value;
        b["pc_stderr"] = res.trace[r.incumbent_ub - 1].pc_stderr;
        b["tau_star"] = r.tau_star;
        b["incumbent_lb_iteration"] = r.incumbent_lb;
        b["incumbent_ub_iteration"] = r.incumbent_ub;
    }
    return b;
}

int exit_code_for(LoopStatus s) {
    switch (s) {
    case LoopStatus::Converged: return 0;
    case LoopStatus::CapReached: return 2;
    case LoopStatus::SolverFailed: return 1;
    }
    return 1;
}

struct DiscountedSetup {
    DiscountedMdp mdp;
    BasisSet bases;
    ConstraintSamplePlan plan;
    DiscountedDriverOptions opts;
    std::optional<PicParams> pic;
    json info;
};

DiscountedSetup make_discounted(const RunConfig& c) {
    DiscountedSetup st{};
    const std::uint64_t bases_seed = derived_seed(c.seed, kBasesStream);
    st.info["bases_seed"] = bases_seed;
    st.opts.model = c.model;
    st.opts.lb_mode = c.lb_mode;
    st.opts.saddle = c.saddle;
    st.opts.sim = c.sim;
    if (c.problem == ProblemKind::Toy) {
        st.mdp = build_toy();
        st.bases = BasisSet::fourier(1, c.sigma_lo, c.sigma_hi, bases_seed, true);
        st.plan = ConstraintSamplePlan::product(toy_state_grid(), toy_action_grid());
        const std::vector<double> thetas = c.thetas;
        st.opts.extender = [thetas](BasisSet& b, std::size_t count) {
            for (std::size_t k = 0; k < count; ++k) {
                if (b.size() < thetas.size())
                    b.push(FourierBasis{0.0, {thetas[b.size()]}, 1.0});
                else
                    b.extend(1);
            }
        };
        if (c.toy_analytic_pc) {
            const DiscountedMdp* mdp = &st.mdp;
            const std::size_t points = c.sim.action_grid;
            st.opts.pc = [mdp, points](const BasisSet& b, const VfaWeights& w) {
                // The greedy toy policy plays argmin_a V(a) at every state.
                const Vec a = greedy_action(*mdp, b, w, Vec{0.0}, action_grid(*mdp, points));
                PolicyCostEstimate e;
                e.mean = toy_constant_policy_cost(a[0]);
                return e;
            };
        }
        st.info["constraint_pairs"] = st.plan.size();
    } else {
        const PicParams p = instance_from_table(c.pic_id);
        st.pic = p;
        Rng dr = Rng(c.seed).split(kDemandStream);
        st.mdp = build_pic(p, sample_demands(p, c.saa, dr));
        st.bases = BasisSet::fourier(3, c.sigma_lo, c.sigma_hi, bases_seed);
        Rng pr = Rng(c.seed).split(kPlanStream);
        st.plan = ConstraintSamplePlan::uniform(st.mdp, c.constraints, pr);
        st.opts.constants = [p](const VfaWeights& w) { return pic_constants(p, w); };
        if (c.redraw_constraints) {
            const DiscountedMdp* mdp = &st.mdp;
            const std::uint64_t seed = c.seed;
            const std::size_t n = c.constraints;
            st.opts.redraw = [mdp, seed, n](std::size_t it) {
                Rng r = Rng(seed).split(kPlanStream).split(it);
                return ConstraintSamplePlan::uniform(*mdp, n, r);
            };
        }
        st.info["constraint_pairs"] = c.constraints;
        st.info["saa_samples"] = c.saa;
        st.info["instance"] = to_json(p);
    }
    return st;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg) {
    RunOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    out.dir = fresh_run_dir(cfg);
    json manifest = to_json(cfg);
    json info = {{"version", 1}, {"run_dir", out.dir.filename().string()}};
    DualSimplexBackend backend;
    info["backend"] = backend.name();

    LoopResult res;
    try {
        if (cfg.problem == ProblemKind::Gjr) {
            Rng ir = Rng(cfg.seed).split(kInstanceStream);
            const GjrParams p = gjr_instance(cfg.gjr, ir);
            const std::uint64_t bases_seed = derived_seed(cfg.seed, kBasesStream);
            GjrDriver driver(p, gjr_bases(p, bases_seed), backend, cfg.gjr_opts);
            res = run_loop(driver, cfg.loop);
            info["bases_seed"] = bases_seed;
            info["instance"] = to_json(p);
            info["stump_sigma"] = driver.bases().stump_sigma();
            info["bases"] = to_json(driver.bases());
            info["driver_seed"] = cfg.gjr_opts.seed;
            write_json(out.dir / "instance.json", {{"spec", to_json(cfg.gjr)}, {"params", to_json(p)}});
            if (!driver.cg_runs().empty()) {
                std::ofstream cg(out.dir / "cg_trace.csv");
                write_cg_trace_csv(cg, driver.cg_runs().back().trace);
                json cuts = json::array();
                for (const auto& r : driver.cg_runs()) cuts.push_back(r.cuts);
                info["cuts_per_iteration"] = cuts;
            }
            if (!res.trace.empty()) {
                const auto& r = res.trace.back();
                info["incumbent_ub_weights"] = to_json(driver.history()[r.incumbent_ub - 1]);
                info["incumbent_lb_weights"] = to_json(driver.history()[r.incumbent_lb - 1]);
            }
        } else {
            DiscountedSetup st = make_discounted(cfg);
            info.update(st.info);
            DiscountedDriver driver(st.mdp, st.bases, st.plan, backend, st.opts);
            res = run_loop(driver, cfg.loop);
            info["bases"] = to_json(driver.bases());
            if (!driver.saddle_history().empty()) {
                json acc = json::array();
                for (const auto& e : driver.saddle_history()) acc.push_back(e.acceptance);
                info["saddle_acceptance"] = acc;
                info["saddle_lambda"] = driver.saddle_history().back().lambda;
            }
            if (!res.trace.empty()) {
                const auto& r = res.trace.back();
                const VfaWeights& ub = driver.history()[r.incumbent_ub - 1];
                const VfaWeights& lb = driver.history()[r.incumbent_lb - 1];
                info["incumbent_ub_weights"] = to_json(ub);
                info["incumbent_lb_weights"] = to_json(lb);
                const std::size_t n_ub = ub.betas.size();
                const BasisSet ub_bases = driver.bases().prefix(n_ub);
                if (cfg.problem == ProblemKind::Toy) {
                    std::ofstream curve(out.dir / "vfa_curve.csv");
                    curve << "s,vfa_lb,vfa_ub,v_star\n";
                    curve.precision(17);
                    for (const Vec& s : toy_state_grid())
                        curve << s[0] << ',' << vfa_value(driver.bases(), lb, s) << ','
                              << vfa_value(driver.bases(), ub, s) << ',' << toy_value_function(s[0]) << '\n';
                }
                SimConfig visits = cfg.sim;
                if (visits.horizon == 0) visits.horizon = default_horizon(st.mdp.gamma);
                write_visit_csv(out.dir / "visit_frequency.csv",
                                estimate_visit_frequency(st.mdp, ub_bases, ub, cfg.visit_bins, visits));
                SimConfig one = cfg.sim;
                one.replications = 1;
                std::ofstream roll(out.dir / "rollout.csv");
                simulate_policy_cost(st.mdp, ub_bases, ub, one, &roll);
            }
        }
    } catch (const std::exception& e) {
        out.error = e.what();
        out.exit_code = 1;
        info["error"] = out.error;
    }

    out.status = res.status;
    if (out.error.empty()) {
        out.exit_code = exit_code_for(res.status);
        if (!res.error.empty()) out.error = res.error;
    }
    {
        std::ofstream trace(out.dir / "trace.csv");
        write_trace_csv(trace, res.trace);
    }
    json tj = trace_to_json(res.trace);
    tj["status"] = to_string(res.status);
    write_json(out.dir / "trace.json", tj);
    write_json(out.dir / "bounds.json", bounds_json(cfg, res));
    info["status"] = to_string(res.status);
    info["exit_code"] = out.exit_code;
    info["wallclock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["run_info"] = info;
    write_json(out.dir / "manifest.json", manifest);
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<SummaryRow> summarize_runs(const std::vector<fs::path>& run_dirs) {
    if (run_dirs.empty()) throw std::invalid_argument("summarize: no run directories given");
    std::vector<std::pair<std::string, std::string>> keys;
    std::vector<std::vector<double>> gaps;
    for (const auto& dir : run_dirs) {
        std::ifstream in(dir / "bounds.json");
        if (!in) throw std::invalid_argument("summarize: " + (dir / "bounds.json").string() + " not found");
        json b;
        try {
            b = json::parse(in);
        } catch (const json::exception&) {
            throw std::invalid_argument("summarize: " + dir.string() + ": bounds.json is not valid JSON");
        }
        if (b.value("version", 0) != 1 || !b.contains("problem") || !b.contains("model") || !b.contains("tau_star") ||
            !b["tau_star"].is_number())
            throw std::invalid_argument("summarize: " + dir.string() + ": bounds.json has an inconsistent schema");
        const std::pair<std::string, std::string> key{b["problem"].get<std::string>(), b["model"].get<std::string>()};
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(key);
            gaps.emplace_back();
            it = keys.end() - 1;
        }
        gaps[static_cast<std::size_t>(it - keys.begin())].push_back(b["tau_star"].get<double>());
    }
    std::vector<SummaryRow> rows;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto& g = gaps[k];
        rows.push_back({keys[k].first, keys[k].second, g.size(), *std::min_element(g.begin(), g.end()), median(g),
                        *std::max_element(g.begin(), g.end())});
    }
    return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "problem,model,runs,min_gap,median_gap,max_gap\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.problem << ',' << r.model << ',' << r.runs << ',' << r.min_gap << ',' << r.median_gap << ','
           << r.max_gap << '\n';
}

json instance_json(const std::string& problem, std::uint64_t seed) {
    if (problem == "pic") return pic_catalog_json();
    RunConfig c;
    parse_problem(c, problem);
    switch (c.problem) {
    case ProblemKind::Toy:
        return {{"problem", "toy"},
                {"gamma", kToyGamma},
                {"state_box", {0.0, 1.0}},
                {"action_box", {0.0, 1.0}},
                {"transition", "s' = s w.p. 0.1, s' = a w.p. 0.9"},
                {"cost", "|s - 0.5|"},
                {"state_grid", kToyStateGrid},
                {"action_grid", kToyActionGrid}};
    case ProblemKind::Pic: return to_json(instance_from_table(c.pic_id));
    case ProblemKind::Gjr: {
        Rng r = Rng(seed).split(kInstanceStream);
        return {{"spec", to_json(c.gjr)}, {"params", to_json(gjr_instance(c.gjr, r))}};
    }
    }
    return {};
}

}  // namespace falp
