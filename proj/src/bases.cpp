#include "falp/bases.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace falp {

namespace {
constexpr std::uint64_t kSigmaStream = std::numeric_limits<std::uint64_t>::max();

void check_range(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw std::invalid_argument("sigma range must satisfy 0 < lo <= hi");
}
}  // namespace

double eval_fourier(const FourierBasis& b, const Vec& s) {
    if (s.size() != b.omega.size()) throw std::invalid_argument("Fourier basis: dimension mismatch");
    double arg = b.q;
    for (std::size_t i = 0; i < s.size(); ++i) arg += b.omega[i] * s[i];
    return std::cos(arg);
}

double stump_surrogate(double x, double eps) {
    if (x >= eps) return 1.0;
    if (x <= -eps) return -1.0;
    return x / eps;
}

double eval_stump(const StumpBasis& b, const Vec& s, double eps) {
    if (b.q_index < 1 || b.q_index > s.size()) throw std::invalid_argument("stump basis: coordinate out of range");
    return stump_surrogate(s[b.q_index - 1] - b.omega, eps);
}

BasisSet BasisSet::fourier(std::size_t dim, double sigma_lo, double sigma_hi, std::uint64_t seed, bool zero_phase) {
    check_range(sigma_lo, sigma_hi);
    if (dim == 0) throw std::invalid_argument("basis dimension must be positive");
    BasisSet set;
    set.kind_ = BasisKind::Fourier;
    set.dim_ = dim;
    set.seed_ = seed;
    set.sigma_lo_ = sigma_lo;
    set.sigma_hi_ = sigma_hi;
    set.zero_phase_ = zero_phase;
    return set;
}

BasisSet BasisSet::stumps(std::size_t dim, double sigma_lo, double sigma_hi, std::uint64_t seed, double eps) {
    check_range(sigma_lo, sigma_hi);
    if (dim == 0) throw std::invalid_argument("basis dimension must be positive");
    if (!(eps > 0)) throw std::invalid_argument("stump eps must be positive");
    BasisSet set;
    set.kind_ = BasisKind::Stump;
    set.dim_ = dim;
    set.seed_ = seed;
    set.sigma_lo_ = sigma_lo;
    set.sigma_hi_ = sigma_hi;
    set.eps_ = eps;
    return set;
}

double BasisSet::stump_sigma() const {
    Rng r = Rng(seed_).split(kSigmaStream);
    return r.uniform(sigma_lo_, sigma_hi_);
}

void BasisSet::extend(std::size_t count) {
    const Rng root(seed_);
    if (kind_ == BasisKind::Fourier) {
        for (std::size_t k = 0; k < count; ++k) {
            Rng r = root.split(fourier_.size());
            FourierBasis b;
            b.sigma = r.uniform(sigma_lo_, sigma_hi_);
            const double q = r.uniform(-std::numbers::pi, std::numbers::pi);
            b.q = zero_phase_ ? 0.0 : q;
            b.omega.resize(dim_);
            for (auto& w : b.omega) w = r.normal() / b.sigma;
            fourier_.push_back(std::move(b));
        }
    } else {
        const double sigma = stump_sigma();
        for (std::size_t k = 0; k < count; ++k) {
            Rng r = root.split(stumps_.size());
            StumpBasis b;
            b.sigma = sigma;
            b.q_index = 1 + r.index(dim_);
            b.omega = r.uniform(-sigma, sigma);
            stumps_.push_back(b);
        }
    }
}

void BasisSet::push(const FourierBasis& b) {
    if (kind_ != BasisKind::Fourier || b.omega.size() != dim_) throw std::invalid_argument("basis kind/dimension mismatch");
    fourier_.push_back(b);
}

void BasisSet::push(const StumpBasis& b) {
    if (kind_ != BasisKind::Stump || b.q_index < 1 || b.q_index > dim_) throw std::invalid_argument("basis kind/dimension mismatch");
    stumps_.push_back(b);
}

BasisSet BasisSet::prefix(std::size_t n) const {
    if (n > size()) throw std::invalid_argument("prefix longer than basis set");
    BasisSet out = *this;
    if (kind_ == BasisKind::Fourier) out.fourier_.resize(n);
    else out.stumps_.resize(n);
    return out;
}

double BasisSet::eval(std::size_t i, const Vec& s) const {
    return kind_ == BasisKind::Fourier ? eval_fourier(fourier_.at(i), s) : eval_stump(stumps_.at(i), s, eps_);
}

void BasisSet::eval_all(const Vec& s, std::size_t n, double* out) const {
    if (n > size()) throw std::invalid_argument("eval_all: n exceeds basis count");
    if (s.size() != dim_) throw std::invalid_argument("basis evaluation: dimension mismatch");
    if (kind_ == BasisKind::Fourier) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& b = fourier_[i];
            double arg = b.q;
            for (std::size_t k = 0; k < dim_; ++k) arg += b.omega[k] * s[k];
            out[i] = std::cos(arg);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = stump_surrogate(s[stumps_[i].q_index - 1] - stumps_[i].omega, eps_);
    }
}

BasisSet sample_fourier(std::size_t count, std::size_t dim, double sigma_lo, double sigma_hi, Rng& rng) {
    if (count == 0) throw std::invalid_argument("sample_fourier: count must be positive");
    BasisSet set = BasisSet::fourier(dim, sigma_lo, sigma_hi, rng.next_u64());
    set.extend(count);
    return set;
}

BasisSet sample_stumps(std::size_t count, std::size_t dim, double sigma_lo, double sigma_hi, Rng& rng) {
    if (count == 0) throw std::invalid_argument("sample_stumps: count must be positive");
    BasisSet set = BasisSet::stumps(dim, sigma_lo, sigma_hi, rng.next_u64());
    set.extend(count);
    return set;
}

nlohmann::json to_json(const BasisSet& set) {
    nlohmann::json j;
    j["kind"] = set.kind() == BasisKind::Fourier ? "fourier" : "stump";
    j["seed"] = set.seed();
    j["dim"] = set.dim();
    j["sigma_range"] = {set.sigma_lo(), set.sigma_hi()};
    auto entries = nlohmann::json::array();
    if (set.kind() == BasisKind::Fourier) {
        j["zero_phase"] = set.zero_phase();
        for (const auto& b : set.fourier_entries()) entries.push_back({{"q", b.q}, {"omega", b.omega}, {"sigma", b.sigma}});
    } else {
        j["eps"] = set.eps();
        for (const auto& b : set.stump_entries())
            entries.push_back({{"q_index", b.q_index}, {"omega", b.omega}, {"sigma", b.sigma}});
    }
    j["entries"] = entries;
    return j;
}

BasisSet basis_set_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    const auto range = j.at("sigma_range");
    const double lo = range.at(0), hi = range.at(1);
    const std::uint64_t seed = j.at("seed");
    const std::size_t dim = j.at("dim");
    if (kind == "fourier") {
        BasisSet set = BasisSet::fourier(dim, lo, hi, seed, j.value("zero_phase", false));
        for (const auto& e : j.at("entries")) set.push(FourierBasis{e.at("q"), e.at("omega").get<Vec>(), e.at("sigma")});
        return set;
    }
    if (kind == "stump") {
        BasisSet set = BasisSet::stumps(dim, lo, hi, seed, j.value("eps", kStumpEps));
        for (const auto& e : j.at("entries")) set.push(StumpBasis{e.at("q_index"), e.at("omega"), e.at("sigma")});
        return set;
    }
    throw std::invalid_argument("unknown basis kind: " + kind);
}

double fourier_theta_second_moment(std::size_t dim, double sigma_lo, double sigma_hi) {
    check_range(sigma_lo, sigma_hi);
    // E[sigma^-2] for sigma ~ U[lo, hi] is 1/(lo*hi); the phase q ~ U[-pi, pi] adds pi^2/3.
    return static_cast<double>(dim) / (sigma_lo * sigma_hi) + std::numbers::pi * std::numbers::pi / 3.0;
}

double delta_constant(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
    return std::sqrt(2.0 * std::log(1.0 / delta));
}

double omega_constant(double state_diameter, double lipschitz, double theta_second_moment) {
    return 4.0 * (state_diameter + 1.0) * lipschitz * std::sqrt(theta_second_moment);
}

double state_diameter(const Box& box) {
    double acc = 0.0;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        const double m = std::max(std::abs(box.lo[i]), std::abs(box.hi[i]));
        acc += m * m;
    }
    return std::sqrt(acc);
}

BoundConstants fourier_bound_constants(const Box& state_box, double sigma_lo, double sigma_hi, double delta) {
    BoundConstants c;
    c.lipschitz = 1.0;
    c.state_diameter = state_diameter(state_box);
    c.omega_const = omega_constant(c.state_diameter, c.lipschitz, fourier_theta_second_moment(state_box.dim(), sigma_lo, sigma_hi));
    c.delta_const = delta_constant(delta);
    return c;
}

long long falp_sample_bound(double eps, double delta, double b_norm, const BoundConstants& c, double gamma) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(b_norm >= 0.0)) throw std::invalid_argument("b_norm must be non-negative");
    const double inner = 0.5 * (1.0 + gamma) * c.omega_const + delta_constant(delta);
    const double value = b_norm * b_norm * inner * inner / (eps * eps);
    return static_cast<long long>(std::ceil(value));
}

}  // namespace falp
