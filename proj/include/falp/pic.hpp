#pragma once

#include "falp/mdp.hpp"
#include "falp/rng.hpp"

#include "json.hpp"

#include <utility>
#include <vector>

namespace falp {

struct TruncatedNormal {
    double lo = 0.0, hi = 10.0, mean = 5.0, sd = 2.0;

    // Inverse-CDF draw on [lo, hi].
    double sample(Rng& rng) const;
    double quantile(double u) const;
};

// Perishable inventory control with life l = 2 and lead time L = 2.
// State (s0, s1, p1): on-hand of ages 0 and 1 (s0 may be backlogged down to
// s_min) and the outstanding order; action a in [0, a_max].
struct PicParams {
    int id = 0;
    int life = 2;
    int lead = 2;
    double c_o = 0, c_h = 0, c_d = 0, c_b = 0, c_l = 100;
    double a_max = 10, s_min = -10;
    double gamma = 0.95;
    TruncatedNormal demand;
};

inline constexpr int kPicInstances = 16;
inline constexpr std::size_t kPicSaaDefault = 5000;

PicParams instance_from_table(int id);

Box pic_state_box(const PicParams& p);
Box pic_action_box(const PicParams& p);

Vec pic_transition(const PicParams& p, const Vec& s, double a, double D);
// Cost for a single demand draw.
double pic_stage_cost(const PicParams& p, const Vec& s, double a, double D);
// Order cost plus the sample average of the penalties over `demands`.
double pic_cost(const PicParams& p, const Vec& s, double a, const std::vector<double>& demands);

std::pair<Vec, Vec> sample_state_action(const PicParams& p, Rng& rng);
std::vector<double> sample_demands(const PicParams& p, std::size_t count, Rng& rng);

// Discounted MDP whose expectations use the fixed demand sample set;
// chi = nu = the atom (5, 5, 5).
DiscountedMdp build_pic(const PicParams& p, std::vector<double> demands);

nlohmann::json to_json(const PicParams& p);
nlohmann::json pic_catalog_json();

}  // namespace falp
