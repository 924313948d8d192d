#include "falp/pic.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace falp {

double TruncatedNormal::quantile(double u) const {
    const boost::math::normal_distribution<double> n(mean, sd);
    const double plo = boost::math::cdf(n, lo);
    const double phi = boost::math::cdf(n, hi);
    const double p = std::clamp(plo + u * (phi - plo), plo, phi);
    if (p <= 0.0) return lo;
    if (p >= 1.0) return hi;
    return std::clamp(boost::math::quantile(n, p), lo, hi);
}

double TruncatedNormal::sample(Rng& rng) const { return quantile(rng.uniform()); }

namespace {
struct Row {
    double c_o, c_h, c_d, c_b, a_max, s_min, gamma;
};
constexpr std::array<Row, kPicInstances> kTable{{
    {20, 2, 5, 10, 10, -10, .95},  {20, 2, 5, 10, 10, -10, .99},  {20, 5, 10, 8, 10, -10, .95},
    {20, 5, 10, 8, 10, -10, .99},  {20, 2, 10, 10, 10, -10, .95}, {20, 2, 10, 10, 10, -10, .99},
    {20, 2, 10, 10, 30, -30, .95}, {20, 2, 10, 10, 30, -30, .99}, {16, 5, 8, 8, 30, -30, .95},
    {16, 5, 8, 8, 30, -30, .99},   {20, 5, 10, 8, 50, -50, .95},  {20, 5, 10, 8, 50, -50, .99},
    {20, 2, 5, 10, 50, -50, .95},  {20, 2, 5, 10, 50, -50, .99},  {20, 2, 12, 6, 50, -50, .95},
    {20, 2, 12, 6, 50, -50, .99},
}};
}  // namespace

PicParams instance_from_table(int id) {
    if (id < 1 || id > kPicInstances) throw std::invalid_argument("PIC instance id must be in 1..16");
    const Row& r = kTable[static_cast<std::size_t>(id - 1)];
    PicParams p;
    p.id = id;
    p.c_o = r.c_o;
    p.c_h = r.c_h;
    p.c_d = r.c_d;
    p.c_b = r.c_b;
    p.a_max = r.a_max;
    p.s_min = r.s_min;
    p.gamma = r.gamma;
    return p;
}

Box pic_state_box(const PicParams& p) { return Box{{p.s_min, 0.0, 0.0}, {p.a_max, p.a_max, p.a_max}}; }
Box pic_action_box(const PicParams& p) { return Box{{0.0}, {p.a_max}}; }

namespace {
double pos(double x) { return x > 0.0 ? x : 0.0; }

double next_on_hand(const PicParams& p, const Vec& s, double D) { return std::max(s[1] - pos(D - s[0]), p.s_min); }

double penalties(const PicParams& p, const Vec& s, double D) {
    const double s0 = s[0], s1 = s[1];
    return p.c_h * pos(s1 - pos(D - s0)) + p.c_d * pos(s0 - D) + p.c_b * pos(D - s0 - s1) +
           p.c_l * pos(p.s_min + D - s0 - s1);
}
}  // namespace

Vec pic_transition(const PicParams& p, const Vec& s, double a, double D) {
    return {next_on_hand(p, s, D), s[2], a};
}

double pic_stage_cost(const PicParams& p, const Vec& s, double a, double D) {
    return std::pow(p.gamma, p.lead) * p.c_o * a + penalties(p, s, D);
}

double pic_cost(const PicParams& p, const Vec& s, double a, const std::vector<double>& demands) {
    if (demands.empty()) throw std::invalid_argument("pic_cost: empty demand sample");
    double total = 0.0;
    for (double D : demands) total += penalties(p, s, D);
    return std::pow(p.gamma, p.lead) * p.c_o * a + total / static_cast<double>(demands.size());
}

std::pair<Vec, Vec> sample_state_action(const PicParams& p, Rng& rng) {
    Vec s = pic_state_box(p).sample(rng);
    Vec a = pic_action_box(p).sample(rng);
    return {std::move(s), std::move(a)};
}

std::vector<double> sample_demands(const PicParams& p, std::size_t count, Rng& rng) {
    std::vector<double> d(count);
    for (auto& x : d) x = p.demand.sample(rng);
    return d;
}

namespace {

// Noise averages of exp(i w x) for the on-hand shift x = max(s1 - (D - s0)+, s_min).
// Demands at or below s0 leave x = s1, demands past s0 + s1 - s_min clamp to
// s_min, and in between x = s0 + s1 - D, so sorted prefix sums of cos(w D) and
// sin(w D) give each average in O(log K).
class PicShiftMoments {
public:
    PicShiftMoments(const PicParams& p, const std::vector<double>& demands)
        : s_min_(p.s_min), state_(std::make_shared<State>()) {
        state_->sorted = demands;
        std::sort(state_->sorted.begin(), state_->sorted.end());
    }

    void operator()(const Vec& s, const Vec& omega, double& cm, double& sm) const {
        const double w = omega[0];
        const Table& t = table(w);
        const auto& d = state_->sorted;
        const double K = static_cast<double>(d.size());
        const std::size_t lo = std::upper_bound(d.begin(), d.end(), s[0]) - d.begin();
        const double thr = s[0] + s[1] - s_min_;
        const std::size_t hi = std::max(lo, static_cast<std::size_t>(std::lower_bound(d.begin(), d.end(), thr) - d.begin()));
        const double wl = static_cast<double>(lo) / K, wh = static_cast<double>(d.size() - hi) / K;
        const double c = s[0] + s[1];
        const double C = t.cos_prefix[hi] - t.cos_prefix[lo], S = t.sin_prefix[hi] - t.sin_prefix[lo];
        const double cc = std::cos(w * c), sc = std::sin(w * c);
        cm = wl * std::cos(w * s[1]) + (cc * C + sc * S) + wh * std::cos(w * s_min_);
        sm = wl * std::sin(w * s[1]) + (sc * C - cc * S) + wh * std::sin(w * s_min_);
    }

private:
    struct Table {
        std::vector<double> cos_prefix, sin_prefix;
    };
    struct State {
        std::vector<double> sorted;
        std::mutex mu;
        std::unordered_map<double, std::shared_ptr<const Table>> tables;
    };

    const Table& table(double w) const {
        std::lock_guard<std::mutex> lock(state_->mu);
        auto it = state_->tables.find(w);
        if (it != state_->tables.end()) return *it->second;
        auto t = std::make_shared<Table>();
        const auto& d = state_->sorted;
        const double K = static_cast<double>(d.size());
        t->cos_prefix.assign(d.size() + 1, 0.0);
        t->sin_prefix.assign(d.size() + 1, 0.0);
        for (std::size_t k = 0; k < d.size(); ++k) {
            t->cos_prefix[k + 1] = t->cos_prefix[k] + std::cos(w * d[k]) / K;
            t->sin_prefix[k + 1] = t->sin_prefix[k] + std::sin(w * d[k]) / K;
        }
        return *state_->tables.emplace(w, std::move(t)).first->second;
    }

    double s_min_;
    std::shared_ptr<State> state_;
};

}  // namespace

DiscountedMdp build_pic(const PicParams& p, std::vector<double> demands) {
    DiscountedMdp mdp;
    mdp.name = "pic:" + std::to_string(p.id);
    mdp.state_box = pic_state_box(p);
    mdp.action_box = pic_action_box(p);
    mdp.gamma = p.gamma;
    mdp.cost = [p](const Vec& s, const Vec& a, const Vec& n) { return pic_stage_cost(p, s, a[0], n[0]); };
    mdp.transition = [p](const Vec& s, const Vec& a, const Vec& n) { return pic_transition(p, s, a[0], n[0]); };
    std::vector<Vec> samples;
    samples.reserve(demands.size());
    for (double D : demands) samples.push_back({D});
    mdp.noise = NoiseSupport::sample_average(std::move(samples));
    const TruncatedNormal law = p.demand;
    mdp.noise_sampler = [law](Rng& rng) { return Vec{law.sample(rng)}; };
    mdp.initial = StateDistribution::degenerate({5.0, 5.0, 5.0});
    mdp.relevance = mdp.initial;
    mdp.additive = AdditiveTransition{
        [](const Vec& s, const Vec& a) { return Vec{0.0, s[2], a[0]}; },
        [p](const Vec& s, const Vec& n, Vec& shift) {
            shift.assign(3, 0.0);
            shift[0] = next_on_hand(p, s, n[0]);
        },
        PicShiftMoments(p, demands)};
    return mdp;
}

nlohmann::json to_json(const PicParams& p) {
    return {{"id", p.id},         {"life", p.life},       {"lead", p.lead},   {"c_o", p.c_o},
            {"c_h", p.c_h},       {"c_d", p.c_d},         {"c_b", p.c_b},     {"c_l", p.c_l},
            {"a_max", p.a_max},   {"s_min", p.s_min},     {"gamma", p.gamma},
            {"demand", {{"distribution", "truncated-normal"}, {"range", {p.demand.lo, p.demand.hi}}, {"mean", p.demand.mean}, {"sd", p.demand.sd}}}};
}

nlohmann::json pic_catalog_json() {
    auto arr = nlohmann::json::array();
    for (int id = 1; id <= kPicInstances; ++id) arr.push_back(to_json(instance_from_table(id)));
    return {{"instances", arr}};
}

}  // namespace falp
