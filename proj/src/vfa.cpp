#include "falp/vfa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace falp {

nlohmann::json to_json(const VfaWeights& w) { return {{"beta0", w.beta0}, {"betas", w.betas}}; }

VfaWeights vfa_weights_from_json(const nlohmann::json& j) {
    return VfaWeights{j.at("beta0").get<double>(), j.at("betas").get<Vec>()};
}

double vfa_value(const BasisSet& bases, const VfaWeights& w, const Vec& s) {
    if (w.betas.size() > bases.size()) throw std::invalid_argument("weights longer than basis set");
    std::vector<double> phi(w.betas.size());
    bases.eval_all(s, phi.size(), phi.data());
    double v = w.beta0;
    for (std::size_t i = 0; i < phi.size(); ++i) v += w.betas[i] * phi[i];
    return v;
}

namespace {

bool use_fourier_fast_path(const DiscountedMdp& mdp, const BasisSet& bases) {
    return bases.kind() == BasisKind::Fourier && mdp.additive.has_value();
}

// Noise averages of cos(omega.shift) and sin(omega.shift) per basis.
void fourier_shift_moments(const DiscountedMdp& mdp, const BasisSet& bases, const Vec& s, std::size_t first,
                           std::size_t last, std::vector<double>& cmom, std::vector<double>& smom) {
    if (mdp.additive->fourier_moments) {
        cmom.assign(last - first, 0.0);
        smom.assign(last - first, 0.0);
        for (std::size_t i = first; i < last; ++i)
            mdp.additive->fourier_moments(s, bases.fourier_entries()[i].omega, cmom[i - first], smom[i - first]);
        return;
    }
    const std::size_t d = bases.dim();
    const std::size_t K = mdp.noise.size();
    std::vector<Vec> shifts(K, Vec(d, 0.0));
    for (std::size_t k = 0; k < K; ++k) mdp.additive->shift(s, mdp.noise.values[k], shifts[k]);
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t k = 0; k < K; ++k)
            if (shifts[k][c] != 0.0) {
                active.push_back(c);
                break;
            }
    // Merge noise samples with identical shifts (e.g. every demand below on-hand stock).
    std::vector<std::size_t> order(K);
    for (std::size_t k = 0; k < K; ++k) order[k] = k;
    auto key_less = [&](std::size_t x, std::size_t y) {
        for (std::size_t c : active)
            if (shifts[x][c] != shifts[y][c]) return shifts[x][c] < shifts[y][c];
        return x < y;
    };
    std::sort(order.begin(), order.end(), key_less);
    std::vector<Vec> ushift;
    Vec uw;
    for (std::size_t idx = 0; idx < K; ++idx) {
        const std::size_t k = order[idx];
        Vec key(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) key[j] = shifts[k][active[j]];
        if (!ushift.empty() && ushift.back() == key)
            uw.back() += mdp.noise.weights[k];
        else {
            ushift.push_back(std::move(key));
            uw.push_back(mdp.noise.weights[k]);
        }
    }
    cmom.assign(last - first, 0.0);
    smom.assign(last - first, 0.0);
    const auto& entries = bases.fourier_entries();
    for (std::size_t i = first; i < last; ++i) {
        const Vec& om = entries[i].omega;
        double cs = 0.0, sn = 0.0;
        for (std::size_t u = 0; u < ushift.size(); ++u) {
            double arg = 0.0;
            for (std::size_t j = 0; j < active.size(); ++j) arg += om[active[j]] * ushift[u][j];
            cs += uw[u] * std::cos(arg);
            sn += uw[u] * std::sin(arg);
        }
        cmom[i - first] = cs;
        smom[i - first] = sn;
    }
}

double fourier_at_base(const FourierBasis& b, const Vec& base, double cm, double sm) {
    double arg = b.q;
    for (std::size_t c = 0; c < base.size(); ++c) arg += b.omega[c] * base[c];
    return std::cos(arg) * cm - std::sin(arg) * sm;
}

}  // namespace

void expected_features(const DiscountedMdp& mdp, const BasisSet& bases, const Vec& s, const Vec& a, std::size_t first,
                       std::size_t last, double* out) {
    if (last > bases.size() || first > last) throw std::invalid_argument("expected_features: bad basis range");
    mdp.check_pair(s, a);
    if (first == last) return;
    if (use_fourier_fast_path(mdp, bases)) {
        std::vector<double> cm, sm;
        fourier_shift_moments(mdp, bases, s, first, last, cm, sm);
        const Vec base = mdp.additive->base(s, a);
        for (std::size_t i = first; i < last; ++i)
            out[i - first] = fourier_at_base(bases.fourier_entries()[i], base, cm[i - first], sm[i - first]);
        return;
    }
    for (std::size_t i = first; i < last; ++i) out[i - first] = 0.0;
    std::vector<double> phi(last);
    for (std::size_t k = 0; k < mdp.noise.size(); ++k) {
        const Vec next = mdp.transition(s, a, mdp.noise.values[k]);
        bases.eval_all(next, last, phi.data());
        for (std::size_t i = first; i < last; ++i) out[i - first] += mdp.noise.weights[k] * phi[i];
    }
}

void ValueFunction::expected_next(const DiscountedMdp& mdp, const Vec& s, const std::vector<Vec>& actions,
                                  Vec& out) const {
    out.assign(actions.size(), 0.0);
    for (std::size_t j = 0; j < actions.size(); ++j)
        for (std::size_t k = 0; k < mdp.noise.size(); ++k)
            out[j] += mdp.noise.weights[k] * value(mdp.transition(s, actions[j], mdp.noise.values[k]));
}

LinearVfa::LinearVfa(const BasisSet& bases, VfaWeights w) : bases_(&bases), w_(std::move(w)) {
    if (w_.betas.size() > bases.size()) throw std::invalid_argument("weights longer than basis set");
}

double LinearVfa::value(const Vec& s) const { return vfa_value(*bases_, w_, s); }

void LinearVfa::expected_next(const DiscountedMdp& mdp, const Vec& s, const std::vector<Vec>& actions,
                              Vec& out) const {
    const std::size_t n = w_.betas.size();
    out.assign(actions.size(), w_.beta0);
    if (n == 0) return;
    if (use_fourier_fast_path(mdp, *bases_)) {
        std::vector<double> cm, sm;
        fourier_shift_moments(mdp, *bases_, s, 0, n, cm, sm);
        for (std::size_t j = 0; j < actions.size(); ++j) {
            const Vec base = mdp.additive->base(s, actions[j]);
            double v = w_.beta0;
            for (std::size_t i = 0; i < n; ++i)
                v += w_.betas[i] * fourier_at_base(bases_->fourier_entries()[i], base, cm[i], sm[i]);
            out[j] = v;
        }
        return;
    }
    std::vector<double> phi(n);
    for (std::size_t j = 0; j < actions.size(); ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < mdp.noise.size(); ++k) {
            bases_->eval_all(mdp.transition(s, actions[j], mdp.noise.values[k]), n, phi.data());
            double vk = 0.0;
            for (std::size_t i = 0; i < n; ++i) vk += w_.betas[i] * phi[i];
            v += mdp.noise.weights[k] * vk;
        }
        out[j] = w_.beta0 + v;
    }
}

}  // namespace falp
