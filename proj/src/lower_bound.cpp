#include "falp/lower_bound.hpp"

#include "falp/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace falp {

double saddle_Lambda(int d_SA, double radius, double diameter, double volume, double L_y) {
    const double d = static_cast<double>(d_SA);
    const double log_inner = std::lgamma(1.0 + 0.5 * d) - d * std::log(radius * std::sqrt(std::numbers::pi)) + std::log(volume);
    return -log_inner - L_y * (radius + diameter);
}

LipschitzConstants pic_constants(const PicParams& p, const VfaWeights& w) {
    LipschitzConstants c;
    c.L_c = 2.0 * (std::pow(p.gamma, p.lead) * p.c_o * p.a_max + p.c_h * p.a_max + p.c_b * p.s_min + p.c_d * p.a_max +
                   p.c_l * p.a_max);
    double l1 = std::abs(w.beta0);
    for (double b : w.betas) l1 += std::abs(b);
    c.L_y = (4.0 * l1 + c.L_c) / (1.0 - p.gamma);
    c.d_SA = 4;
    c.radius = p.a_max / 2.0;
    c.diameter = 3.0 * p.a_max * p.a_max + (p.s_min - p.a_max) * (p.s_min - p.a_max);
    c.volume = pic_state_box(p).volume() * pic_action_box(p).volume();
    c.Lambda = saddle_Lambda(c.d_SA, c.radius, c.diameter, c.volume, c.L_y);
    return c;
}

double default_lambda(const LipschitzConstants& c) {
    const double denom = c.Lambda + static_cast<double>(c.d_SA);
    if (denom >= 1.0) return 1.0 / denom;
    return std::min(1.0, 1.0 / std::abs(denom));
}

double chi_mean(const DiscountedMdp& mdp, const ValueFunction& v) {
    double m = 0.0;
    for (std::size_t k = 0; k < mdp.initial.atoms.size(); ++k) m += mdp.initial.weights[k] * v.value(mdp.initial.atoms[k]);
    return m;
}

double y_value(const DiscountedMdp& mdp, const ValueFunction& v, double chi_mean_value, const Vec& s, const Vec& a) {
    mdp.check_pair(s, a);
    Vec next;
    v.expected_next(mdp, s, {a}, next);
    return chi_mean_value + (mdp.expected_cost(s, a) + mdp.gamma * next[0] - v.value(s)) / (1.0 - mdp.gamma);
}

double y_value(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w, const Vec& s, const Vec& a) {
    const LinearVfa v(bases, w);
    return y_value(mdp, v, chi_mean(mdp, v), s, a);
}

namespace {
double reflect(double x, double lo, double hi) {
    const double w = hi - lo;
    if (w <= 0) return lo;
    double u = std::fmod(x - lo, 2.0 * w);
    if (u < 0) u += 2.0 * w;
    return u <= w ? lo + u : hi - (u - w);
}
}  // namespace

LowerBoundEstimate estimate_lower_bound(const DiscountedMdp& mdp, const ValueFunction& v, const SaddleConfig& cfg,
                                        const LipschitzConstants& c) {
    if (cfg.chains == 0 || cfg.chain_length == 0 || cfg.burn_in >= cfg.chain_length)
        throw std::invalid_argument("saddle config: need chains >= 1 and burn_in < chain_length");
    const double lambda = cfg.lambda > 0 ? cfg.lambda : default_lambda(c);
    if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("saddle config: lambda must lie in (0, 1]");

    const std::size_t ds = mdp.state_box.dim(), da = mdp.action_box.dim();
    const double cm = chi_mean(mdp, v);
    std::vector<double> chain_mean(cfg.chains, 0.0), accept(cfg.chains, 0.0);
    const Rng root(cfg.seed);

    parallel_for(cfg.chains, cfg.threads, [&](std::size_t k) {
        Rng rng = root.split(k);
        Vec s = mdp.state_box.sample(rng), a = mdp.action_box.sample(rng);
        double y = y_value(mdp, v, cm, s, a);
        double sum = 0.0;
        std::size_t accepted = 0;
        for (std::size_t t = 0; t < cfg.chain_length; ++t) {
            Vec s2 = s, a2 = a;
            for (std::size_t i = 0; i < ds; ++i) {
                const double lo = mdp.state_box.lo[i], hi = mdp.state_box.hi[i];
                s2[i] = reflect(s[i] + cfg.step_fraction * (hi - lo) * rng.normal(), lo, hi);
            }
            for (std::size_t i = 0; i < da; ++i) {
                const double lo = mdp.action_box.lo[i], hi = mdp.action_box.hi[i];
                a2[i] = reflect(a[i] + cfg.step_fraction * (hi - lo) * rng.normal(), lo, hi);
            }
            const double y2 = y_value(mdp, v, cm, s2, a2);
            const double u = rng.uniform();
            // min(1, exp((y - y2) / lambda)), written to avoid overflow.
            if (y2 <= y || u < std::exp((y - y2) / lambda)) {
                s = std::move(s2);
                a = std::move(a2);
                y = y2;
                ++accepted;
            }
            if (t >= cfg.burn_in) sum += y;
        }
        chain_mean[k] = sum / static_cast<double>(cfg.chain_length - cfg.burn_in);
        accept[k] = static_cast<double>(accepted) / static_cast<double>(cfg.chain_length);
    });

    double total_accept = 0.0;
    for (double a : accept) total_accept += a;
    if (total_accept == 0.0) throw std::runtime_error("lower bound: every proposal was rejected in every chain");

    LowerBoundEstimate est;
    est.lambda = lambda;
    est.acceptance = accept;
    est.chain_means = chain_mean;
    double m = 0.0;
    for (double x : chain_mean) m += x;
    m /= static_cast<double>(cfg.chains);
    est.mean_y = m;
    if (cfg.chains > 1) {
        double ss = 0.0;
        for (double x : chain_mean) ss += (x - m) * (x - m);
        est.stderr_ = std::sqrt(ss / static_cast<double>(cfg.chains - 1) / static_cast<double>(cfg.chains));
    }
    est.correction = lambda * (c.Lambda + static_cast<double>(c.d_SA) * std::log(lambda));
    est.bound = est.mean_y + est.correction;
    return est;
}

LowerBoundEstimate estimate_lower_bound(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        const SaddleConfig& cfg, const LipschitzConstants& c) {
    return estimate_lower_bound(mdp, LinearVfa(bases, w), cfg, c);
}

}  // namespace falp
