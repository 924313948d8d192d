#include "falp/gjr.hpp"

#include "falp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace falp {

std::string to_string(SbarScheme s) {
    switch (s) {
    case SbarScheme::Random: return "random";
    case SbarScheme::Constant: return "constant";
    case SbarScheme::Discrete: return "discrete";
    }
    return "?";
}

SbarScheme sbar_scheme_from_string(const std::string& s) {
    if (s == "random") return SbarScheme::Random;
    if (s == "constant") return SbarScheme::Constant;
    if (s == "discrete") return SbarScheme::Discrete;
    throw std::invalid_argument("unknown s_bar scheme '" + s + "' (expected random, constant or discrete)");
}

namespace {

Vec pinned_or_draw(const std::optional<Vec>& pinned, std::size_t J, const char* name, Rng rng,
                   const std::function<double(Rng&)>& draw) {
    if (pinned) {
        if (pinned->size() != J) throw std::invalid_argument(std::string("gjr spec: ") + name + " must have J entries");
        return *pinned;
    }
    Vec v(J);
    for (auto& x : v) x = draw(rng);
    return v;
}

}  // namespace

GjrParams gjr_instance(const GjrSpec& spec, Rng& rng) {
    static const int kZ[] = {50, 60, 67, 75, 80, 100};
    if (spec.J < 2) throw std::invalid_argument("gjr spec: J must be >= 2");
    if (std::find(std::begin(kZ), std::end(kZ), spec.z) == std::end(kZ))
        throw std::invalid_argument("gjr spec: z must be one of 50, 60, 67, 75, 80, 100");
    if (!(spec.c_prime >= 0)) throw std::invalid_argument("gjr spec: c_prime must be >= 0");
    const std::size_t J = spec.J;
    const Rng base(rng.next_u64());

    GjrParams p;
    p.J = J;
    p.c_prime = spec.c_prime;
    p.lambda = pinned_or_draw(spec.lambda, J, "lambda", base.split(0), [](Rng& r) { return r.uniform(0.0, 10.0); });
    const Vec u = pinned_or_draw(spec.u, J, "u", base.split(1), [](Rng& r) { return r.uniform(); });
    const Vec alpha = pinned_or_draw(spec.alpha, J, "alpha", base.split(2), [](Rng& r) {
        static const double kAlpha[] = {2.0, 4.0, 8.0};
        return kAlpha[r.index(3)];
    });
    p.c_item = pinned_or_draw(spec.c_item, J, "c_item", base.split(3), [](Rng& r) { return r.uniform(0.0, 60.0); });
    p.h.assign(J, 0.0);

    double common = 0.0;
    for (std::size_t k = 0; k < J; ++k) common += p.lambda[k] * (u[k] + 1.0 / static_cast<double>(J));
    p.s_bar.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        switch (spec.scheme) {
        case SbarScheme::Random: p.s_bar[j] = 10.0 * p.lambda[j] * u[j] + p.lambda[j]; break;
        case SbarScheme::Constant: p.s_bar[j] = common; break;
        case SbarScheme::Discrete: p.s_bar[j] = alpha[j] * common; break;
        }
    }
    Vec sorted = p.s_bar;
    std::sort(sorted.begin(), sorted.end());
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(spec.z) * static_cast<double>(J) / 100.0)));
    for (std::size_t k = 0; k < std::min(m, J); ++k) p.a_bar += sorted[k];
    validate(p);
    return p;
}

void validate(const GjrParams& p) {
    if (p.J < 2) throw std::invalid_argument("gjr: J must be >= 2");
    if (p.lambda.size() != p.J || p.s_bar.size() != p.J || p.c_item.size() != p.J || p.h.size() != p.J)
        throw std::invalid_argument("gjr: per-item vectors must have J entries");
    double total = 0.0;
    for (std::size_t j = 0; j < p.J; ++j) {
        if (!(p.lambda[j] > 0)) throw std::invalid_argument("gjr: usage rates must be positive");
        if (!(p.s_bar[j] > 0)) throw std::invalid_argument("gjr: inventory limits must be positive");
        if (p.c_item[j] < 0 || p.h[j] < 0) throw std::invalid_argument("gjr: costs must be non-negative");
        total += p.s_bar[j];
    }
    if (!(p.a_bar > 0) || p.a_bar > total * (1 + 1e-12))
        throw std::invalid_argument("gjr: a_bar must lie in (0, sum s_bar]");
}

nlohmann::json to_json(const GjrSpec& s) {
    nlohmann::json j = {{"J", s.J}, {"scheme", to_string(s.scheme)}, {"z", s.z}, {"c_prime", s.c_prime}};
    if (s.lambda) j["lambda"] = *s.lambda;
    if (s.u) j["u"] = *s.u;
    if (s.alpha) j["alpha"] = *s.alpha;
    if (s.c_item) j["c_item"] = *s.c_item;
    return j;
}

GjrSpec gjr_spec_from_json(const nlohmann::json& j) {
    GjrSpec s;
    s.J = j.at("J").get<std::size_t>();
    s.scheme = sbar_scheme_from_string(j.at("scheme").get<std::string>());
    s.z = j.at("z").get<int>();
    s.c_prime = j.value("c_prime", 100.0);
    if (j.contains("lambda")) s.lambda = j.at("lambda").get<Vec>();
    if (j.contains("u")) s.u = j.at("u").get<Vec>();
    if (j.contains("alpha")) s.alpha = j.at("alpha").get<Vec>();
    if (j.contains("c_item")) s.c_item = j.at("c_item").get<Vec>();
    return s;
}

nlohmann::json to_json(const GjrParams& p) {
    return {{"J", p.J},           {"lambda", p.lambda}, {"s_bar", p.s_bar}, {"a_bar", p.a_bar},
            {"c_prime", p.c_prime}, {"c_item", p.c_item}, {"h", p.h}};
}

GjrParams gjr_params_from_json(const nlohmann::json& j) {
    GjrParams p;
    p.J = j.at("J").get<std::size_t>();
    p.lambda = j.at("lambda").get<Vec>();
    p.s_bar = j.at("s_bar").get<Vec>();
    p.a_bar = j.at("a_bar").get<double>();
    p.c_prime = j.at("c_prime").get<double>();
    p.c_item = j.at("c_item").get<Vec>();
    p.h = j.contains("h") ? j.at("h").get<Vec>() : Vec(p.J, 0.0);
    validate(p);
    return p;
}

bool gjr_state_valid(const GjrParams& p, const Vec& s) {
    if (s.size() != p.J) return false;
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.J; ++j) {
        if (s[j] < -kGjrTol || s[j] > p.s_bar[j] + kGjrTol) return false;
        mn = std::min(mn, s[j]);
    }
    return mn <= kGjrTol;
}

double gjr_time(const GjrParams& p, const Vec& s, const Vec& a) {
    double T = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.J; ++j) T = std::min(T, (s[j] + a[j]) / p.lambda[j]);
    return T;
}

namespace {

// Capacity checks shared by the cost and the full feasibility predicate.
bool capacity_ok(const GjrParams& p, const Vec& s, const Vec& a) {
    if (s.size() != p.J || a.size() != p.J) return false;
    double sum = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < p.J; ++j) {
        if (a[j] < -kGjrTol || s[j] < -kGjrTol) return false;
        if (s[j] + a[j] > p.s_bar[j] + kGjrTol) return false;
        if (a[j] > kGjrTol) any = true;
        sum += a[j];
    }
    return any && sum <= p.a_bar + kGjrTol;
}

}  // namespace

bool gjr_feasible(const GjrParams& p, const Vec& s, const Vec& a) {
    return capacity_ok(p, s, a) && gjr_time(p, s, a) > kGjrTol;
}

GjrStep gjr_step(const GjrParams& p, const Vec& s, const Vec& a) {
    if (!gjr_feasible(p, s, a)) throw std::domain_error("gjr_step: infeasible action");
    GjrStep st;
    st.T = gjr_time(p, s, a);
    st.next.resize(p.J);
    std::size_t arg = 0;
    for (std::size_t j = 0; j < p.J; ++j) {
        st.next[j] = std::max(0.0, s[j] + a[j] - st.T * p.lambda[j]);
        if ((s[j] + a[j]) / p.lambda[j] < (s[arg] + a[arg]) / p.lambda[arg]) arg = j;
    }
    st.next[arg] = 0.0;
    return st;
}

double gjr_cost(const GjrParams& p, const Vec& s, const Vec& a) {
    if (!capacity_ok(p, s, a)) throw std::domain_error("gjr_cost: infeasible action");
    double c = p.c_prime;
    for (std::size_t j = 0; j < p.J; ++j) {
        if (a[j] > kGjrTol) c += p.c_item[j];
        if (p.h[j] != 0.0) c += (2.0 * s[j] * a[j] + a[j] * a[j]) * p.h[j] / (2.0 * p.lambda[j]);
    }
    return c;
}

SemiMdp gjr_semi_mdp(const GjrParams& p) {
    SemiMdp m;
    m.state_box = Box{Vec(p.J, 0.0), p.s_bar};
    m.feasible = [p](const Vec& s, const Vec& a) { return gjr_feasible(p, s, a); };
    m.cost = [p](const Vec& s, const Vec& a) { return gjr_cost(p, s, a); };
    m.transition_time = [p](const Vec& s, const Vec& a) { return gjr_step(p, s, a).T; };
    m.transition = [p](const Vec& s, const Vec& a) { return gjr_step(p, s, a).next; };
    return m;
}

BasisSet gjr_bases(const GjrParams& p, std::uint64_t seed) {
    const double hi = *std::max_element(p.s_bar.begin(), p.s_bar.end());
    return BasisSet::stumps(p.J, 1.0, std::max(1.0, hi), seed);
}

double BiasApprox::eta(const GjrParams& p) const {
    double e = eta_hat;
    for (std::size_t j = 0; j < beta1.size(); ++j) e += beta1[j] * p.lambda[j];
    return e;
}

double BiasApprox::u(const BasisSet& bases, const Vec& s) const {
    double v = beta0;
    for (std::size_t j = 0; j < beta1.size(); ++j) v -= beta1[j] * s[j];
    for (std::size_t i = 0; i < beta2.size(); ++i) v -= beta2[i] * bases.eval(i, s);
    return v;
}

nlohmann::json to_json(const BiasApprox& b) {
    return {{"eta_hat", b.eta_hat}, {"beta0", b.beta0}, {"beta1", b.beta1}, {"beta2", b.beta2}};
}

BiasApprox bias_approx_from_json(const nlohmann::json& j) {
    BiasApprox b;
    b.eta_hat = j.at("eta_hat").get<double>();
    b.beta0 = j.at("beta0").get<double>();
    b.beta1 = j.at("beta1").get<Vec>();
    b.beta2 = j.at("beta2").get<Vec>();
    return b;
}

namespace {

void add_trust_box(LpModel& m, double M) {
    const std::size_t n = m.num_vars();
    std::vector<double> row(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        row[k] = 1.0;
        m.add_row(row, M, RowTag::Bound);
        row[k] = -1.0;
        m.add_row(row, M, RowTag::Bound);
        row[k] = 0.0;
    }
}

}  // namespace

LpModel build_avg_alp(const GjrParams& p, const BasisSet& bases, const std::vector<StateAction>& pairs,
                      const BiasApprox* prev, const std::vector<Vec>& guide_states) {
    if (pairs.empty()) throw std::invalid_argument("build_avg_alp: no constraint pairs");
    if (bases.kind() != BasisKind::Stump || bases.dim() != p.J)
        throw std::invalid_argument("build_avg_alp: expected a stump basis set over the J items");
    if (prev && prev->beta2.size() > bases.size())
        throw std::invalid_argument("build_avg_alp: previous solution has more bases than the current set");
    const std::size_t J = p.J, N = bases.size(), nv = 2 + J + N;
    LpModel m(nv);
    m.objective()[0] = 1.0;
    for (std::size_t j = 0; j < J; ++j) m.objective()[2 + j] = p.lambda[j];
    m.reserve(pairs.size() + guide_states.size() + 2);

    std::vector<double> row(nv), phi(N), phin(N);
    for (const auto& pr : pairs) {
        const GjrStep st = gjr_step(p, pr.s, pr.a);
        std::fill(row.begin(), row.end(), 0.0);
        row[0] = st.T;
        for (std::size_t j = 0; j < J; ++j) row[2 + j] = pr.a[j];
        bases.eval_all(pr.s, N, phi.data());
        bases.eval_all(st.next, N, phin.data());
        for (std::size_t i = 0; i < N; ++i) row[2 + J + i] = phin[i] - phi[i];
        m.add_row(row, gjr_cost(p, pr.s, pr.a), RowTag::Standard);
    }
    std::fill(row.begin(), row.end(), 0.0);
    row[1] = 1.0;
    m.add_row(row, 0.0, RowTag::Bound);
    row[1] = -1.0;
    m.add_row(row, 0.0, RowTag::Bound);
    if (prev) {
        for (const Vec& s : guide_states) {
            row[0] = 0.0;
            row[1] = -1.0;
            for (std::size_t j = 0; j < J; ++j) row[2 + j] = s[j];
            bases.eval_all(s, N, phi.data());
            for (std::size_t i = 0; i < N; ++i) row[2 + J + i] = phi[i];
            m.add_row(row, -prev->u(bases, s), RowTag::SelfGuiding);
        }
    }
    return m;
}

BiasApprox bias_from_solution(const GjrParams& p, std::size_t n_bases, const Vec& x) {
    if (x.size() != 2 + p.J + n_bases) throw std::invalid_argument("bias_from_solution: size mismatch");
    BiasApprox b;
    b.eta_hat = x[0];
    b.beta0 = x[1];
    b.beta1.assign(x.begin() + 2, x.begin() + 2 + static_cast<std::ptrdiff_t>(p.J));
    b.beta2.assign(x.begin() + 2 + static_cast<std::ptrdiff_t>(p.J), x.end());
    return b;
}

double avg_slack(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const Vec& s, const Vec& a) {
    const GjrStep st = gjr_step(p, s, a);
    double v = gjr_cost(p, s, a) - w.eta_hat * st.T;
    for (std::size_t j = 0; j < p.J; ++j) v -= w.beta1[j] * a[j];
    for (std::size_t i = 0; i < w.beta2.size(); ++i) v -= w.beta2[i] * (bases.eval(i, st.next) - bases.eval(i, s));
    return v;
}

namespace {

struct Candidate {
    double slack;
    Vec s, a;
};

void keep_best(std::vector<Candidate>& best, std::size_t k, double slack, const Vec& s, const Vec& a) {
    if (best.size() == k && slack >= best.back().slack) return;
    auto it = std::upper_bound(best.begin(), best.end(), slack,
                               [](double v, const Candidate& c) { return v < c.slack; });
    best.insert(it, Candidate{slack, s, a});
    if (best.size() > k) best.pop_back();
}

// Odometer over per-coordinate index ranges.
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& lo, const std::vector<std::size_t>& hi) {
    for (std::size_t k = idx.size(); k-- > 0;) {
        if (++idx[k] <= hi[k]) return true;
        idx[k] = lo[k];
    }
    return false;
}

// Pattern search over the free coordinates, keeping s[zero_item] = 0.
Candidate refine(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, Candidate c, std::size_t zero_item,
                 double step0) {
    const std::size_t J = p.J;
    auto eval = [&](const Vec& s, const Vec& a, double& out) {
        if (!gjr_feasible(p, s, a)) return false;
        out = avg_slack(p, bases, w, s, a);
        return true;
    };
    double h = step0;
    for (std::size_t rounds = 0; h > 1e-9 && rounds < 2000; ++rounds) {
        bool improved = false;
        for (std::size_t v = 0; v < 2 * J; ++v) {
            const bool is_state = v < J;
            const std::size_t j = is_state ? v : v - J;
            if (is_state && j == zero_item) continue;
            for (double dir : {1.0, -1.0}) {
                Vec s = c.s, a = c.a;
                double& x = is_state ? s[j] : a[j];
                if (!is_state && x <= kGjrTol) break;  // keep the support fixed
                const double hi = is_state ? p.s_bar[j] : p.s_bar[j] - s[j];
                x = std::clamp(x + dir * h * p.s_bar[j], 0.0, hi);
                if (!is_state && x <= kGjrTol) continue;
                double val;
                if (eval(s, a, val) && val < c.slack - 1e-15) {
                    c = Candidate{val, std::move(s), std::move(a)};
                    improved = true;
                    break;
                }
            }
        }
        h = improved ? std::min(2.0 * h, step0) : 0.5 * h;
    }
    return c;
}

}  // namespace

SeparationResult separate(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const SearchPlan& plan) {
    if (plan.grid < 2) throw std::invalid_argument("separate: grid must have at least 2 points");
    const std::size_t J = p.J, g = plan.grid;
    const double sep_tol = plan.sep_tol >= 0 ? plan.sep_tol : 1e-6 * (1.0 + std::abs(p.c_prime));
    const double denom = static_cast<double>(g - 1);
    double work = 0.0;
    for (std::size_t mask = 1; mask < (1u << J); ++mask)
        work += static_cast<double>(__builtin_popcount(static_cast<unsigned>(mask))) *
                std::pow(static_cast<double>(g), static_cast<double>(J - 1 + __builtin_popcount(static_cast<unsigned>(mask))));
    if (work > 2e8) throw std::invalid_argument("separate: grid too fine for this J; lower SearchPlan::grid");

    struct Branch {
        unsigned mask;
        std::size_t zero;
    };
    std::vector<Branch> branches;
    for (unsigned mask = 1; mask < (1u << J); ++mask)
        for (std::size_t z = 0; z < J; ++z)
            if (mask & (1u << z)) branches.push_back({mask, z});

    std::vector<std::vector<Candidate>> found(branches.size());
    parallel_for(branches.size(), plan.threads, [&](std::size_t b) {
        const auto [mask, zero] = branches[b];
        // Coordinates 0..J-1 index states, J..2J-1 index actions.
        std::vector<std::size_t> lo(2 * J, 0), hi(2 * J, 0);
        for (std::size_t j = 0; j < J; ++j) {
            const bool in = mask & (1u << j);
            if (j == zero) {
                lo[j] = hi[j] = 0;
            } else {
                lo[j] = in ? 0 : 1;
                hi[j] = g - 1;
            }
            lo[J + j] = in ? 1 : 0;
            hi[J + j] = in ? g - 1 : 0;
        }
        std::vector<std::size_t> idx = lo;
        Vec s(J), a(J);
        auto& best = found[b];
        do {
            double sum = 0.0;
            bool ok = true;
            for (std::size_t j = 0; j < J && ok; ++j) {
                s[j] = static_cast<double>(idx[j]) * p.s_bar[j] / denom;
                a[j] = static_cast<double>(idx[J + j]) * p.s_bar[j] / denom;
                sum += a[j];
                if (s[j] + a[j] > p.s_bar[j] + kGjrTol) ok = false;
            }
            if (!ok || sum > p.a_bar + kGjrTol || gjr_time(p, s, a) <= kGjrTol) continue;
            keep_best(best, plan.refine_top, avg_slack(p, bases, w, s, a), s, a);
        } while (advance(idx, lo, hi));
        for (auto& c : best) c = refine(p, bases, w, c, zero, 1.0 / denom);
    });

    SeparationResult r;
    r.slack = std::numeric_limits<double>::infinity();
    for (const auto& list : found)
        for (const auto& c : list)
            if (c.slack < r.slack) {
                r.slack = c.slack;
                r.pair = StateAction{c.s, c.a};
            }
    if (!std::isfinite(r.slack)) throw std::domain_error("separate: no feasible state-action pair on the grid");
    r.slack = avg_slack(p, bases, w, r.pair.s, r.pair.a);
    r.violated = r.slack < -sep_tol;
    return r;
}

std::vector<Vec> sample_gjr_states(const GjrParams& p, std::size_t count, Rng& rng) {
    std::vector<Vec> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vec s(p.J);
        const std::size_t z = rng.index(p.J);
        for (std::size_t j = 0; j < p.J; ++j) s[j] = j == z ? 0.0 : rng.uniform(0.0, p.s_bar[j]);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StateAction> sample_gjr_pairs(const GjrParams& p, std::size_t count, Rng& rng) {
    std::vector<StateAction> out;
    out.reserve(count);
    while (out.size() < count) {
        Vec s = sample_gjr_states(p, 1, rng).front();
        Vec a(p.J, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < p.J; ++j) {
            const bool must = s[j] <= kGjrTol;
            const bool pick = rng.uniform() < 0.5;
            if (must || pick) a[j] = rng.uniform(0.0, p.s_bar[j] - s[j]);
            sum += a[j];
        }
        if (sum > p.a_bar)
            for (auto& x : a) x *= p.a_bar / sum;
        if (gjr_feasible(p, s, a)) out.push_back({std::move(s), std::move(a)});
    }
    return out;
}

CgResult constraint_generation(const GjrParams& p, const BasisSet& bases, std::vector<StateAction> init_pairs,
                               SolverBackend& backend, const BiasApprox* prev, const std::vector<Vec>& guide_states,
                               const CgConfig& cfg) {
    if (init_pairs.empty()) throw std::invalid_argument("constraint_generation: no initial pairs");
    CgResult res;
    res.pairs = std::move(init_pairs);
    std::vector<Vec> guides = guide_states;
    const std::size_t N = bases.size();
    for (std::size_t it = 0;; ++it) {
        LpModel model = build_avg_alp(p, bases, res.pairs, prev, guides);
        if (res.trust_box) add_trust_box(model, cfg.trust_box);
        LpSolution sol = backend.solve(model);
        ++res.lp_solves;
        if (sol.status == LpStatus::Unbounded && !res.trust_box) {
            res.trust_box = true;
            add_trust_box(model, cfg.trust_box);
            sol = backend.solve(model);
            ++res.lp_solves;
        }
        if (sol.status != LpStatus::Optimal)
            throw SolverError(sol.status, "average-cost ALP: " + to_string(sol.status) + " " + sol.message);
        res.solution = bias_from_solution(p, N, sol.x);
        const SeparationResult sep = separate(p, bases, res.solution, cfg.search);
        res.trace.push_back({it, sol.objective, sep.slack, res.trust_box});
        if (!sep.violated) break;
        if (res.cuts >= cfg.max_cuts)
            throw CgCapExceeded("constraint generation: cut cap of " + std::to_string(cfg.max_cuts) + " reached",
                                res.trace);
        res.pairs.push_back(sep.pair);
        res.separated_states.push_back(sep.pair.s);
        if (prev) guides.push_back(sep.pair.s);
        ++res.cuts;
    }
    res.lower_bound = res.solution.eta(p);
    return res;
}

void write_cg_trace_csv(std::ostream& os, const std::vector<CgTraceRow>& trace) {
    os << "iteration,lp_objective,slack,trust_box\n";
    os.precision(17);
    for (const auto& r : trace) os << r.iteration << ',' << r.lp_objective << ',' << r.slack << ',' << r.trust_box << '\n';
}

std::vector<Vec> gjr_action_grid(const GjrParams& p, const Vec& s, std::size_t points) {
    if (points < 2) throw std::invalid_argument("gjr_action_grid: need at least 2 points");
    const std::size_t J = p.J;
    std::vector<std::size_t> idx(J, 0), lo(J, 0), hi(J, points - 1);
    std::vector<Vec> out;
    Vec a(J);
    do {
        for (std::size_t j = 0; j < J; ++j)
            a[j] = static_cast<double>(idx[j]) * std::max(0.0, p.s_bar[j] - s[j]) / static_cast<double>(points - 1);
        if (gjr_feasible(p, s, a)) out.push_back(a);
    } while (advance(idx, lo, hi));
    return out;
}

namespace {

struct Stage {
    double c_minus_eta_t;
    Vec next;
};

Stage stage(const GjrParams& p, double eta, const Vec& s, const Vec& a) {
    const GjrStep st = gjr_step(p, s, a);
    return {gjr_cost(p, s, a) - eta * st.T, st.next};
}

double exhaustive(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, double eta, const Vec& s,
                  std::size_t depth, std::size_t points) {
    if (depth == 0) return w.u(bases, s);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& a : gjr_action_grid(p, s, points)) {
        const Stage st = stage(p, eta, s, a);
        best = std::min(best, st.c_minus_eta_t + exhaustive(p, bases, w, eta, st.next, depth - 1, points));
    }
    return best;
}

}  // namespace

KStepResult k_step_greedy(const GjrParams& p, const BasisSet& bases, const BiasApprox& w, const Vec& s,
                          const GreedyConfig& cfg) {
    if (cfg.K < 1) throw std::invalid_argument("k_step_greedy: K must be >= 1");
    const double eta = w.eta(p);
    const std::vector<Vec> first = gjr_action_grid(p, s, cfg.action_points);
    if (first.empty()) throw std::domain_error("k_step_greedy: no feasible action on the grid");
    KStepResult r;
    r.objective = std::numeric_limits<double>::infinity();
    if (cfg.K <= 2) {
        for (const Vec& a : first) {
            const Stage st = stage(p, eta, s, a);
            const double v = st.c_minus_eta_t + exhaustive(p, bases, w, eta, st.next, cfg.K - 1, cfg.action_points);
            if (v < r.objective) {
                r.objective = v;
                r.action = a;
            }
        }
        return r;
    }

    struct Node {
        std::size_t root;  // index into `first`
        double partial;    // sum of c - eta T so far
        Vec state;
        double score;      // partial + u(state)
    };
    std::vector<Node> beam;
    for (std::size_t k = 0; k < first.size(); ++k) {
        Stage st = stage(p, eta, s, first[k]);
        const double sc = st.c_minus_eta_t + w.u(bases, st.next);
        beam.push_back({k, st.c_minus_eta_t, std::move(st.next), sc});
    }
    auto prune = [&](std::vector<Node>& v) {
        std::stable_sort(v.begin(), v.end(), [](const Node& x, const Node& y) { return x.score < y.score; });
        if (v.size() > cfg.beam) v.resize(cfg.beam);
    };
    for (std::size_t depth = 1; depth < cfg.K; ++depth) {
        prune(beam);
        std::vector<Node> next;
        for (const Node& n : beam)
            for (const Vec& a : gjr_action_grid(p, n.state, cfg.action_points)) {
                Stage st = stage(p, eta, n.state, a);
                const double part = n.partial + st.c_minus_eta_t;
                const double sc = part + w.u(bases, st.next);
                next.push_back({n.root, part, std::move(st.next), sc});
            }
        if (next.empty()) break;
        beam = std::move(next);
    }
    prune(beam);
    r.objective = beam.front().score;
    r.action = first[beam.front().root];
    return r;
}

Vec gjr_start_state(const GjrParams& p) {
    Vec s(p.J);
    for (std::size_t j = 0; j < p.J; ++j) s[j] = j == 0 ? 0.0 : 0.5 * p.s_bar[j];
    return s;
}

AverageCostEstimate simulate_average_cost(const GjrParams& p, const BasisSet& bases, const BiasApprox& w,
                                          std::size_t stages, const GreedyConfig& cfg, const Vec* start) {
    if (stages < 1) throw std::invalid_argument("simulate_average_cost: stages must be >= 1");
    Vec s = start ? *start : gjr_start_state(p);
    if (!gjr_state_valid(p, s)) throw std::invalid_argument("simulate_average_cost: invalid start state");
    AverageCostEstimate e;
    // Dynamics and policy are deterministic, so revisited states reuse their action.
    std::map<Vec, Vec> memo;
    for (std::size_t t = 0; t < stages; ++t) {
        auto it = memo.find(s);
        if (it == memo.end()) it = memo.emplace(s, k_step_greedy(p, bases, w, s, cfg).action).first;
        const Vec a = it->second;
        const GjrStep st = gjr_step(p, s, a);
        e.total_cost += gjr_cost(p, s, a);
        e.total_time += st.T;
        s = st.next;
    }
    e.stages = stages;
    e.average_cost = e.total_cost / e.total_time;
    return e;
}

GjrDriver::GjrDriver(const GjrParams& p, BasisSet bases, SolverBackend& backend, GjrDriverOptions opts)
    : p_(p), bases_(std::move(bases)), backend_(&backend), opts_(std::move(opts)) {
    validate(p_);
    const Rng root(opts_.seed);
    Rng pr = root.split(1);
    pairs_ = sample_gjr_pairs(p_, opts_.init_pairs, pr);
    if (opts_.model == ModelKind::Fglp) {
        Rng gr = root.split(2);
        guides_ = sample_gjr_states(p_, opts_.guide_states, gr);
    }
}

std::size_t GjrDriver::extend(std::size_t count) {
    bases_.extend(count);
    return bases_.size();
}

IterationEval GjrDriver::solve_and_evaluate() {
    const BiasApprox* prev = opts_.model == ModelKind::Fglp && !history_.empty() ? &history_.back() : nullptr;
    CgResult cg;
    try {
        cg = constraint_generation(p_, bases_, pairs_, *backend_, prev, guides_, opts_.cg);
    } catch (const CgCapExceeded& e) {
        throw SolverError(LpStatus::IterationLimit, e.what());
    }
    pairs_ = cg.pairs;
    if (opts_.model == ModelKind::Fglp)
        guides_.insert(guides_.end(), cg.separated_states.begin(), cg.separated_states.end());

    IterationEval ev;
    ev.lb = ev.lb_vfa_mean = cg.lower_bound;
    ev.objective = cg.trace.back().lp_objective;
    ev.max_violation = std::max(0.0, -cg.trace.back().slack);
    if (prev) {
        double m = std::numeric_limits<double>::infinity();
        for (const Vec& s : guides_) m = std::min(m, cg.solution.u(bases_, s) - prev->u(bases_, s));
        ev.guide_min_change = m;
        ev.max_guide_violation = std::max(0.0, -m);
    }
    const AverageCostEstimate pc = simulate_average_cost(p_, bases_, cg.solution, opts_.sim_stages, opts_.greedy);
    ev.pc = pc.average_cost;
    history_.push_back(cg.solution);
    runs_.push_back(std::move(cg));
    return ev;
}

}  // namespace falp
