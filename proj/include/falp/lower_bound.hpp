#pragma once

#include "falp/bases.hpp"
#include "falp/mdp.hpp"
#include "falp/pic.hpp"
#include "falp/vfa.hpp"

#include <cstdint>
#include <vector>

namespace falp {

struct SaddleConfig {
    std::size_t chains = 8;
    std::size_t chain_length = 1500;
    std::size_t burn_in = 1000;
    double lambda = 0.0;  // 0: default_lambda(constants)
    double step_fraction = 0.05;
    std::uint64_t seed = 17;
    std::size_t threads = 1;
};

struct LipschitzConstants {
    double L_c = 0.0;
    double L_y = 0.0;
    double Lambda = 0.0;
    int d_SA = 0;
    double radius = 0.0;
    double diameter = 0.0;
    double volume = 0.0;
};

// Lambda = -ln[Gamma(1 + d/2) (R sqrt(pi))^-d Vol] - L_y (R + diam)
double saddle_Lambda(int d_SA, double radius, double diameter, double volume, double L_y);
LipschitzConstants pic_constants(const PicParams& p, const VfaWeights& w);

// 1/(Lambda + d_SA) when that lies in (0, 1]; otherwise min(1, 1/|Lambda + d_SA|).
double default_lambda(const LipschitzConstants& c);

// E_chi[V] + (c(s,a) + gamma E[V(s')|s,a] - V(s)) / (1 - gamma)
double y_value(const DiscountedMdp& mdp, const ValueFunction& v, double chi_mean, const Vec& s, const Vec& a);
double y_value(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w, const Vec& s, const Vec& a);
double chi_mean(const DiscountedMdp& mdp, const ValueFunction& v);

struct LowerBoundEstimate {
    double bound = 0.0;       // mean_y + correction
    double mean_y = 0.0;
    double stderr_ = 0.0;     // across chain means
    double lambda = 0.0;
    double correction = 0.0;  // lambda (Lambda + d ln lambda)
    std::vector<double> acceptance;  // per chain
    std::vector<double> chain_means;
};

// Metropolis-Hastings over the state-action box with target exp(-y/lambda).
LowerBoundEstimate estimate_lower_bound(const DiscountedMdp& mdp, const ValueFunction& v, const SaddleConfig& cfg,
                                        const LipschitzConstants& c);
LowerBoundEstimate estimate_lower_bound(const DiscountedMdp& mdp, const BasisSet& bases, const VfaWeights& w,
                                        const SaddleConfig& cfg, const LipschitzConstants& c);

}  // namespace falp
