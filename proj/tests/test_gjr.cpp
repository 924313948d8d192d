#include "doctest.h"

#include "falp/gjr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace falp;

namespace {

GjrParams two_items(Vec lambda, Vec s_bar, double a_bar, double c_prime = 100.0, Vec c_item = {0.0, 0.0}) {
    GjrParams p;
    p.J = 2;
    p.lambda = std::move(lambda);
    p.s_bar = std::move(s_bar);
    p.a_bar = a_bar;
    p.c_prime = c_prime;
    p.c_item = std::move(c_item);
    p.h = {0.0, 0.0};
    validate(p);
    return p;
}

GjrParams reference_instance() {
    GjrSpec spec;
    spec.J = 2;
    spec.scheme = SbarScheme::Constant;
    spec.z = 100;
    spec.lambda = Vec{1.0, 1.0};
    Rng r(11);
    return gjr_instance(spec, r);
}

// Best slack over every feasible grid pair with s_zero = 0, as in the search grid.
double grid_oracle(const GjrParams& p, const BasisSet& b, const BiasApprox& w, std::size_t g) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i0 = 0; i0 < g; ++i0)
        for (std::size_t i1 = 0; i1 < g; ++i1)
            for (std::size_t k0 = 0; k0 < g; ++k0)
                for (std::size_t k1 = 0; k1 < g; ++k1) {
                    const Vec s{p.s_bar[0] * i0 / (g - 1.0), p.s_bar[1] * i1 / (g - 1.0)};
                    const Vec a{p.s_bar[0] * k0 / (g - 1.0), p.s_bar[1] * k1 / (g - 1.0)};
                    if (std::min(s[0], s[1]) > 0 || !gjr_feasible(p, s, a)) continue;
                    best = std::min(best, avg_slack(p, b, w, s, a));
                }
    return best;
}

}  // namespace

TEST_SUITE("gjr") {

TEST_CASE("constant scheme gives equal limits and z = 100 sums them") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        GjrSpec spec;
        spec.J = 2;
        Rng r(seed);
        const GjrParams p = gjr_instance(spec, r);
        CHECK(p.s_bar[0] == p.s_bar[1]);
        CHECK(p.a_bar == doctest::Approx(p.s_bar[0] + p.s_bar[1]).epsilon(1e-14));
        CHECK(p.c_prime == 100.0);
        for (double c : p.c_item) {
            CHECK(c >= 0);
            CHECK(c <= 60);
        }
        for (double l : p.lambda) {
            CHECK(l > 0);
            CHECK(l <= 10);
        }
    }
}

TEST_CASE("discrete scheme with pinned draws") {
    GjrSpec spec;
    spec.J = 2;
    spec.scheme = SbarScheme::Discrete;
    spec.alpha = Vec{2, 4};
    spec.u = Vec{0.5, 0.5};
    spec.lambda = Vec{1, 1};
    spec.z = 50;
    Rng r(4);
    const GjrParams p = gjr_instance(spec, r);
    CHECK(p.s_bar[0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(p.s_bar[1] == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(p.a_bar == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("random scheme and spec errors") {
    GjrSpec spec;
    spec.J = 4;
    spec.scheme = SbarScheme::Random;
    spec.u = Vec{0.1, 0.2, 0.3, 0.4};
    spec.lambda = Vec{1, 2, 3, 4};
    spec.z = 75;
    Rng r(9);
    const GjrParams p = gjr_instance(spec, r);
    for (int j = 0; j < 4; ++j) CHECK(p.s_bar[j] == doctest::Approx(10 * p.lambda[j] * (*spec.u)[j] + p.lambda[j]));
    Vec sorted = p.s_bar;
    std::sort(sorted.begin(), sorted.end());
    CHECK(p.a_bar == doctest::Approx(sorted[0] + sorted[1] + sorted[2]));
    spec.z = 70;
    CHECK_THROWS(gjr_instance(spec, r));
    spec.z = 50;
    spec.J = 1;
    CHECK_THROWS(gjr_instance(spec, r));
    CHECK_THROWS(sbar_scheme_from_string("uniform"));
}

TEST_CASE("step examples") {
    const GjrParams p = two_items({1, 1}, {4, 4}, 5);
    const GjrStep a = gjr_step(p, {0, 2}, {3, 0});
    CHECK(a.T == 2.0);
    CHECK(a.next == Vec{1, 0});
    CHECK_THROWS_AS(gjr_step(p, {0, 2}, {4, 2}), std::domain_error);
    const GjrStep b = gjr_step(p, {0, 0}, {1, 1});
    CHECK(b.T == 1.0);
    CHECK(b.next == Vec{0, 0});
    CHECK_THROWS_AS(gjr_step(p, {0, 2}, {0, 0}), std::domain_error);
}

TEST_CASE("cost examples") {
    GjrParams p = two_items({1, 1}, {4, 4}, 8, 100, {7, 30});
    CHECK(gjr_cost(p, {0, 2}, {3, 0}) == 107.0);
    CHECK(gjr_cost(p, {0, 0}, {1, 1}) == 137.0);
    CHECK_THROWS_AS(gjr_cost(p, {0, 2}, {0, 0}), std::domain_error);
    GjrParams h = two_items({2, 1}, {4, 4}, 8, 0, {0, 0});
    h.h = {1, 0};
    CHECK(gjr_cost(h, {1, 0}, {2, 0}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("every step output has a stocked-out item") {
    GjrSpec spec;
    spec.J = 3;
    spec.scheme = SbarScheme::Random;
    spec.z = 67;
    Rng r(12);
    const GjrParams p = gjr_instance(spec, r);
    for (const auto& pr : sample_gjr_pairs(p, 500, r)) {
        const GjrStep st = gjr_step(p, pr.s, pr.a);
        CHECK(*std::min_element(st.next.begin(), st.next.end()) <= 1e-9);
        CHECK(gjr_state_valid(p, st.next));
        CHECK(st.T > 0);
    }
}

TEST_CASE("affine model with no bases") {
    const GjrParams p = reference_instance();
    const BasisSet b = gjr_bases(p, 3);
    Rng r(1);
    const LpModel m = build_avg_alp(p, b, sample_gjr_pairs(p, 20, r));
    CHECK(m.num_vars() == 4);
    CHECK(m.num_rows() == 22);
    CHECK_THROWS_AS(build_avg_alp(p, b, {}), std::invalid_argument);
    CHECK_THROWS_AS(build_avg_alp(p, BasisSet::fourier(2, 1, 2, 1), sample_gjr_pairs(p, 2, r)), std::invalid_argument);
}

TEST_CASE("one-row model solves to c over T") {
    const GjrParams p = two_items({1, 1}, {4, 4}, 8, 100, {10, 0});
    BasisSet b = gjr_bases(p, 5);
    b.extend(2);
    // s = (0, 0), a = (2, 2): T = 2 and s' = 0, so the basis terms vanish.
    LpModel m = build_avg_alp(p, b, {{{0, 0}, {2, 2}}});
    // Pin beta1 and beta2 at zero so the objective only moves eta_hat.
    for (std::size_t k = 2; k < m.num_vars(); ++k) {
        std::vector<double> row(m.num_vars(), 0.0);
        row[k] = 1;
        m.add_row(row, 0, RowTag::Bound);
        row[k] = -1;
        m.add_row(row, 0, RowTag::Bound);
    }
    DualSimplexBackend be;
    const LpSolution s = be.solve(m);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(110.0 / 2.0).epsilon(1e-9));
    CHECK(s.x[1] == 0.0);
}

TEST_CASE("guide rows add one row per guide state") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 5);
    b.extend(3);
    Rng r(8);
    const auto pairs = sample_gjr_pairs(p, 30, r);
    const auto guides = sample_gjr_states(p, 17, r);
    const BiasApprox prev{1.0, 0.0, {0.5, -0.5}, {1, 2, 3}};
    CHECK(build_avg_alp(p, b, pairs, &prev, guides).num_rows() == 30 + 2 + 17);
    CHECK(build_avg_alp(p, b, pairs, nullptr, guides).num_rows() == 30 + 2);
    const BiasApprox too_long{1.0, 0.0, {0, 0}, {1, 2, 3, 4}};
    CHECK_THROWS(build_avg_alp(p, b, pairs, &too_long, guides));
}

TEST_CASE("zero solution is feasible for separation") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 2);
    b.extend(4);
    const BiasApprox zero{0.0, 0.0, {0, 0}, {0, 0, 0, 0}};
    SearchPlan plan;
    plan.grid = 20;
    const SeparationResult r = separate(p, b, zero, plan);
    CHECK_FALSE(r.violated);
    CHECK(r.slack > 0);
}

TEST_CASE("separation beats the grid oracle and reports its own slack") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 2);
    b.extend(6);
    Rng r(3);
    for (int trial = 0; trial < 4; ++trial) {
        BiasApprox w{r.uniform(20, 80), 0.0, {r.normal(0, 10), r.normal(0, 10)}, {}};
        for (int i = 0; i < 6; ++i) w.beta2.push_back(r.normal(0, 10));
        SearchPlan plan;
        plan.grid = 15;
        const SeparationResult s = separate(p, b, w, plan);
        CHECK(s.slack <= grid_oracle(p, b, w, 15) + 1e-9);
        CHECK(std::abs(s.slack - avg_slack(p, b, w, s.pair.s, s.pair.a)) <= 1e-9);
        CHECK(gjr_feasible(p, s.pair.s, s.pair.a));
        CHECK(s.violated == (s.slack < -1e-6 * 101));
    }
    SearchPlan bad;
    bad.grid = 1;
    CHECK_THROWS(separate(p, b, BiasApprox{0, 0, {0, 0}, {}}, bad));
}

TEST_CASE("constraint generation is valid and monotone") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 4);
    b.extend(4);
    Rng r(2);
    DualSimplexBackend be;
    CgConfig cfg;
    cfg.search.grid = 20;
    const CgResult res = constraint_generation(p, b, sample_gjr_pairs(p, 10, r), be, nullptr, {}, cfg);
    REQUIRE(!res.trace.empty());
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        CHECK(res.trace[k].lp_objective <= res.trace[k - 1].lp_objective + 1e-7 * (1 + std::abs(res.trace[k - 1].lp_objective)));
    CHECK(res.pairs.size() == 10 + res.cuts);
    CHECK(res.lower_bound == doctest::Approx(res.solution.eta(p)));
    // Converged: re-separating finds nothing.
    CHECK_FALSE(separate(p, b, res.solution, cfg.search).violated);
    GreedyConfig g;
    g.K = 2;
    g.action_points = 11;
    const AverageCostEstimate sim = simulate_average_cost(p, b, res.solution, 500, g);
    CHECK(res.lower_bound <= sim.average_cost + 1e-3);
    // The initial pairs already contain every cut, so a re-run solves once.
    const CgResult again = constraint_generation(p, b, res.pairs, be, nullptr, {}, cfg);
    CHECK(again.lp_solves == 1);
    CHECK(again.cuts == 0);
}

TEST_CASE("cut cap raises a typed error with the trace") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 4);
    b.extend(4);
    Rng r(2);
    DualSimplexBackend be;
    CgConfig cfg;
    cfg.search.grid = 20;
    cfg.max_cuts = 0;
    try {
        constraint_generation(p, b, sample_gjr_pairs(p, 1, r), be, nullptr, {}, cfg);
        FAIL("expected CgCapExceeded");
    } catch (const CgCapExceeded& e) {
        CHECK(e.trace().size() == 1);
        CHECK(e.trace()[0].slack < 0);
    }
}

TEST_CASE("self-guiding rows hold at the solved point") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 6);
    b.extend(2);
    Rng r(5);
    DualSimplexBackend be;
    CgConfig cfg;
    cfg.search.grid = 20;
    const auto pairs = sample_gjr_pairs(p, 20, r);
    const CgResult first = constraint_generation(p, b, pairs, be, nullptr, {}, cfg);
    b.extend(2);
    const auto guides = sample_gjr_states(p, 200, r);
    const CgResult second = constraint_generation(p, b, first.pairs, be, &first.solution, guides, cfg);
    for (const Vec& s : guides) CHECK(second.solution.u(b, s) >= first.solution.u(b, s) - 1e-6);
    for (const Vec& s : second.separated_states) CHECK(second.solution.u(b, s) >= first.solution.u(b, s) - 1e-6);
    CHECK(std::abs(second.solution.beta0) <= 1e-9);
}

TEST_CASE("K = 1 greedy is the one-step minimizer") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 1);
    b.extend(3);
    const BiasApprox w{50.0, 0.0, {3, -2}, {10, -5, 4}};
    GreedyConfig cfg;
    cfg.K = 1;
    cfg.action_points = 11;
    Rng r(7);
    for (const Vec& s : sample_gjr_states(p, 10, r)) {
        const KStepResult k = k_step_greedy(p, b, w, s, cfg);
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& a : gjr_action_grid(p, s, 11)) {
            const GjrStep st = gjr_step(p, s, a);
            best = std::min(best, gjr_cost(p, s, a) - w.eta(p) * st.T + w.u(b, st.next));
        }
        CHECK(k.objective == doctest::Approx(best).epsilon(1e-12));
    }
    cfg.K = 0;
    CHECK_THROWS(k_step_greedy(p, b, w, gjr_start_state(p), cfg));
}

TEST_CASE("K = 2 greedy matches plan enumeration") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 1);
    b.extend(3);
    const BiasApprox w{50.0, 0.0, {3, -2}, {10, -5, 4}};
    const double eta = w.eta(p);
    GreedyConfig cfg;
    cfg.K = 2;
    cfg.action_points = 7;
    Rng r(8);
    for (const Vec& s : sample_gjr_states(p, 5, r)) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& a1 : gjr_action_grid(p, s, 7)) {
            const GjrStep s1 = gjr_step(p, s, a1);
            const double c1 = gjr_cost(p, s, a1) - eta * s1.T;
            for (const Vec& a2 : gjr_action_grid(p, s1.next, 7)) {
                const GjrStep s2 = gjr_step(p, s1.next, a2);
                best = std::min(best, c1 + gjr_cost(p, s1.next, a2) - eta * s2.T + w.u(b, s2.next));
            }
        }
        CHECK(k_step_greedy(p, b, w, s, cfg).objective == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("zero bias and eta give the myopic cost minimizer") {
    const GjrParams p = two_items({1, 2}, {4, 4}, 8, 100, {10, 40});
    const BasisSet b = gjr_bases(p, 1);
    const BiasApprox zero{0.0, 0.0, {0, 0}, {}};
    GreedyConfig cfg;
    cfg.K = 1;
    cfg.action_points = 5;
    // Only item 1 is empty; replenishing it alone is the cheapest support.
    const KStepResult k = k_step_greedy(p, b, zero, {0, 2}, cfg);
    CHECK(k.objective == 110.0);
    CHECK(k.action[1] == 0.0);
    CHECK(k.action[0] > 0.0);
}

TEST_CASE("single-stage simulation is c over T") {
    const GjrParams p = reference_instance();
    BasisSet b = gjr_bases(p, 1);
    b.extend(2);
    const BiasApprox w{10.0, 0.0, {1, 1}, {2, 2}};
    GreedyConfig cfg;
    cfg.K = 1;
    cfg.action_points = 9;
    const Vec s0 = gjr_start_state(p);
    const Vec a = k_step_greedy(p, b, w, s0, cfg).action;
    const AverageCostEstimate e = simulate_average_cost(p, b, w, 1, cfg);
    CHECK(e.average_cost == doctest::Approx(gjr_cost(p, s0, a) / gjr_step(p, s0, a).T).epsilon(1e-14));
    CHECK_THROWS(simulate_average_cost(p, b, w, 0, cfg));
    const AverageCostEstimate x = simulate_average_cost(p, b, w, 300, cfg);
    const AverageCostEstimate y = simulate_average_cost(p, b, w, 300, cfg);
    CHECK(x.total_cost == y.total_cost);
    CHECK(x.total_time == y.total_time);
}

TEST_CASE("two-cycle average cost") {
    // Myopic policy on a grid of {empty, full} fills. From (0,4) it fills item 1
    // for 100 and reaches (0,2); from (0,2) it fills item 1 again and reaches
    // (0,0); from (0,0) only the joint fill (2,4) is feasible, costs 150 and
    // returns to (0,2). Every step lasts 2.
    const GjrParams p = two_items({1, 1}, {2, 4}, 6, 100, {0, 50});
    const BasisSet b = gjr_bases(p, 1);
    const BiasApprox zero{0.0, 0.0, {0, 0}, {}};
    GreedyConfig cfg;
    cfg.K = 1;
    cfg.action_points = 2;
    const Vec start{0, 4};
    const AverageCostEstimate e = simulate_average_cost(p, b, zero, 2001, cfg, &start);
    const double cycle = (100.0 + 150.0) / (2.0 + 2.0);
    CHECK(e.average_cost == doctest::Approx(cycle).epsilon(1e-3));
    const AverageCostEstimate tail = simulate_average_cost(p, b, zero, 2, cfg, &start);
    CHECK(tail.total_cost == 200.0);
}

TEST_CASE("JSON round trips") {
    GjrSpec spec;
    spec.J = 3;
    spec.scheme = SbarScheme::Discrete;
    spec.z = 67;
    spec.alpha = Vec{2, 4, 8};
    const GjrSpec back = gjr_spec_from_json(to_json(spec));
    CHECK(back.J == 3);
    CHECK(back.scheme == SbarScheme::Discrete);
    CHECK(back.z == 67);
    CHECK(*back.alpha == Vec{2, 4, 8});
    CHECK_FALSE(back.lambda.has_value());
    Rng r(6);
    const GjrParams p = gjr_instance(spec, r);
    const GjrParams q = gjr_params_from_json(to_json(p));
    CHECK(q.s_bar == p.s_bar);
    CHECK(q.a_bar == p.a_bar);
    CHECK(q.c_item == p.c_item);
    const BiasApprox w{1.5, 0.0, {1, 2, 3}, {4, 5}};
    const BiasApprox w2 = bias_approx_from_json(to_json(w));
    CHECK(w2.eta_hat == 1.5);
    CHECK(w2.beta2 == Vec{4, 5});
}

}  // TEST_SUITE
