#pragma once

#include "falp/bases.hpp"
#include "falp/mdp.hpp"

#include <functional>
#include <vector>

namespace falp {

struct VfaWeights {
    double beta0 = 0.0;
    Vec betas;
};

nlohmann::json to_json(const VfaWeights& w);
VfaWeights vfa_weights_from_json(const nlohmann::json& j);

// beta0 + sum_i betas[i] * phi_i(s), using the first betas.size() bases.
double vfa_value(const BasisSet& bases, const VfaWeights& w, const Vec& s);

// E[phi_i(s') | s, a] for bases i in [first, last).
void expected_features(const DiscountedMdp& mdp, const BasisSet& bases, const Vec& s, const Vec& a, std::size_t first,
                       std::size_t last, double* out);

class ValueFunction {
public:
    virtual ~ValueFunction() = default;
    virtual double value(const Vec& s) const = 0;
    // out[k] = E[V(s') | s, actions[k]]
    virtual void expected_next(const DiscountedMdp& mdp, const Vec& s, const std::vector<Vec>& actions, Vec& out) const;
};

class LinearVfa : public ValueFunction {
public:
    LinearVfa(const BasisSet& bases, VfaWeights w);

    double value(const Vec& s) const override;
    void expected_next(const DiscountedMdp& mdp, const Vec& s, const std::vector<Vec>& actions, Vec& out) const override;

    const BasisSet& bases() const { return *bases_; }
    const VfaWeights& weights() const { return w_; }

private:
    const BasisSet* bases_;
    VfaWeights w_;
};

class FunctionVfa : public ValueFunction {
public:
    explicit FunctionVfa(std::function<double(const Vec&)> f) : f_(std::move(f)) {}
    double value(const Vec& s) const override { return f_(s); }

private:
    std::function<double(const Vec&)> f_;
};

}  // namespace falp
