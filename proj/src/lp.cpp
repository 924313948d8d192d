#include "falp/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace falp {

std::string to_string(RowTag tag) {
    switch (tag) {
        case RowTag::Standard: return "standard";
        case RowTag::SelfGuiding: return "self-guiding";
        case RowTag::Bound: return "bound";
    }
    return "standard";
}

RowTag row_tag_from_string(const std::string& s) {
    if (s == "standard") return RowTag::Standard;
    if (s == "self-guiding") return RowTag::SelfGuiding;
    if (s == "bound") return RowTag::Bound;
    throw std::invalid_argument("unknown row tag: " + s);
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::Numeric: return "numeric";
        case LpStatus::IterationLimit: return "iteration-limit";
    }
    return "numeric";
}

void LpModel::add_row(const double* coeffs, double rhs, RowTag tag) {
    for (std::size_t j = 0; j < num_vars_; ++j)
        if (!std::isfinite(coeffs[j])) throw std::invalid_argument("non-finite LP coefficient");
    if (!std::isfinite(rhs)) throw std::invalid_argument("non-finite LP rhs");
    coeffs_.insert(coeffs_.end(), coeffs, coeffs + num_vars_);
    rhs_.push_back(rhs);
    tags_.push_back(tag);
}

void LpModel::add_row(const std::vector<double>& coeffs, double rhs, RowTag tag) {
    if (coeffs.size() != num_vars_) throw std::invalid_argument("row length does not match num_vars");
    add_row(coeffs.data(), rhs, tag);
}

void LpModel::reserve(std::size_t rows) {
    coeffs_.reserve(rows * num_vars_);
    rhs_.reserve(rows);
    tags_.reserve(rows);
}

std::size_t LpModel::count(RowTag tag) const {
    return static_cast<std::size_t>(std::count(tags_.begin(), tags_.end(), tag));
}

double LpModel::max_violation(const std::vector<double>& x, const RowTag* tag) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < num_rows(); ++i) {
        if (tag && tags_[i] != *tag) continue;
        const double* a = row(i);
        double v = -rhs_[i];
        for (std::size_t j = 0; j < num_vars_; ++j) v += a[j] * x[j];
        worst = std::max(worst, v);
    }
    return worst;
}

void write_lp(std::ostream& os, const LpModel& model) {
    os << "falp-lp 1\n";
    os << "vars " << model.num_vars() << "\n";
    os << std::setprecision(17);
    os << "maximize";
    for (double c : model.objective()) os << ' ' << c;
    os << "\nrows " << model.num_rows() << "\n";
    for (std::size_t i = 0; i < model.num_rows(); ++i) {
        os << to_string(model.tag(i)) << ' ' << model.rhs(i);
        const double* a = model.row(i);
        for (std::size_t j = 0; j < model.num_vars(); ++j) os << ' ' << a[j];
        os << '\n';
    }
    os << "end\n";
}

LpModel read_lp(std::istream& is) {
    auto expect = [&](const std::string& word) {
        std::string w;
        if (!(is >> w) || w != word) throw std::runtime_error("LP text: expected '" + word + "'");
    };
    expect("falp-lp");
    int version = 0;
    if (!(is >> version) || version != 1) throw std::runtime_error("LP text: unsupported version");
    expect("vars");
    std::size_t n = 0;
    if (!(is >> n)) throw std::runtime_error("LP text: bad variable count");
    LpModel model(n);
    expect("maximize");
    for (std::size_t j = 0; j < n; ++j)
        if (!(is >> model.objective()[j])) throw std::runtime_error("LP text: bad objective");
    expect("rows");
    std::size_t m = 0;
    if (!(is >> m)) throw std::runtime_error("LP text: bad row count");
    model.reserve(m);
    std::vector<double> a(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::string tag;
        double rhs = 0.0;
        if (!(is >> tag >> rhs)) throw std::runtime_error("LP text: bad row " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j)
            if (!(is >> a[j])) throw std::runtime_error("LP text: bad row " + std::to_string(i));
        model.add_row(a, rhs, row_tag_from_string(tag));
    }
    expect("end");
    return model;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CoreResult {
    LpStatus status = LpStatus::Numeric;
    Eigen::VectorXd z;
    std::size_t iterations = 0;
};

// max g.z  s.t.  Q z <= b, |z_j| <= M, solved as the dual
//   min b.lam + M sum(mu+ + mu-)  s.t.  Q^T lam + mu+ - mu- = g,  lam, mu >= 0
// by revised primal simplex. The simplex multipliers are z.
CoreResult solve_core(const RowMat& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& g, double M,
                      const DualSimplexBackend::Options& opt) {
    const std::size_t m = static_cast<std::size_t>(Q.rows());
    const std::size_t r = static_cast<std::size_t>(Q.cols());
    const std::size_t ncols = m + 2 * r;
    CoreResult out;

    Eigen::VectorXd row_norm(m);
    for (std::size_t i = 0; i < m; ++i) row_norm[i] = std::max(Q.row(i).norm(), 1e-300);

    auto cost = [&](std::size_t col) { return col < m ? b[col] : M; };

    std::vector<std::size_t> basis(r);
    std::vector<char> in_basis(ncols, 0);
    for (std::size_t j = 0; j < r; ++j) {
        basis[j] = g[j] >= 0 ? m + j : m + r + j;
        in_basis[basis[j]] = 1;
    }

    auto column = [&](std::size_t col, Eigen::VectorXd& a) {
        if (col < m) {
            a = Q.row(col).transpose();
        } else {
            a.setZero(r);
            if (col < m + r) a[col - m] = 1.0;
            else a[col - m - r] = -1.0;
        }
    };

    Eigen::MatrixXd Binv(r, r);
    Eigen::VectorXd xB(r);
    auto refactor = [&]() -> bool {
        Eigen::MatrixXd B(r, r);
        Eigen::VectorXd a;
        for (std::size_t k = 0; k < r; ++k) {
            column(basis[k], a);
            B.col(k) = a;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible()) return false;
        Binv = lu.inverse();
        xB = Binv * g;
        for (std::size_t k = 0; k < r; ++k)
            if (xB[k] < 0) xB[k] = 0;
        return true;
    };
    if (!refactor()) return out;

    const std::size_t max_it = opt.max_iterations ? opt.max_iterations : 20 * (m + 2 * r) + 10000;
    Eigen::VectorXd y(r), cB(r), w(r), a(r), d(m);
    std::size_t since_refactor = 0, degenerate_run = 0;
    bool bland = false;
    bool verified = false;

    for (std::size_t it = 0; it < max_it; ++it) {
        out.iterations = it;
        for (std::size_t k = 0; k < r; ++k) cB[k] = cost(basis[k]);
        y.noalias() = Binv.transpose() * cB;
        d.noalias() = b - Q * y;

        std::size_t enter = ncols;
        double best = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (in_basis[i]) continue;
            if (d[i] >= -opt.feas_tol * (1.0 + std::abs(b[i]))) continue;
            if (bland) {
                enter = i;
                break;
            }
            const double score = d[i] / row_norm[i];
            if (score < best) {
                best = score;
                enter = i;
            }
        }
        if (enter == ncols || !bland) {
            for (std::size_t j = 0; j < r; ++j) {
                const double dp = M - y[j], dm = M + y[j];
                const double tol = opt.feas_tol * (1.0 + M);
                if (!in_basis[m + j] && dp < -tol && (bland ? enter == ncols : dp < best)) {
                    best = dp;
                    enter = m + j;
                    if (bland) break;
                }
                if (!in_basis[m + r + j] && dm < -tol && (bland ? enter == ncols : dm < best)) {
                    best = dm;
                    enter = m + r + j;
                    if (bland) break;
                }
            }
        }

        if (enter == ncols) {
            if (!verified && since_refactor > 0) {
                if (!refactor()) return out;
                since_refactor = 0;
                verified = true;
                continue;
            }
            out.z = y;
            const double gmax = g.cwiseAbs().maxCoeff();
            for (std::size_t k = 0; k < r; ++k)
                if (basis[k] >= m && xB[k] > opt.feas_tol * (1.0 + gmax)) {
                    out.status = LpStatus::Unbounded;
                    return out;
                }
            out.status = LpStatus::Optimal;
            return out;
        }
        verified = false;

        column(enter, a);
        w.noalias() = Binv * a;
        const double wmax = w.cwiseAbs().maxCoeff();
        const double ptol = opt.pivot_tol * std::max(1.0, wmax);

        // Harris two-pass ratio test on the dual basic variables.
        double theta_max = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < r; ++k)
            if (w[k] > ptol) theta_max = std::min(theta_max, (xB[k] + opt.feas_tol) / w[k]);
        if (!std::isfinite(theta_max)) {
            if (since_refactor > 0) {
                if (!refactor()) return out;
                since_refactor = 0;
                continue;
            }
            out.status = LpStatus::Infeasible;
            return out;
        }
        std::size_t leave = r;
        double best_w = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            if (w[k] <= ptol || xB[k] / w[k] > theta_max) continue;
            if (bland) {
                if (leave == r || basis[k] < basis[leave]) leave = k;
            } else if (w[k] > best_w) {
                best_w = w[k];
                leave = k;
            }
        }
        if (leave == r) return out;

        const double theta = std::max(0.0, xB[leave] / w[leave]);
        xB -= theta * w;
        xB[leave] = theta;
        for (std::size_t k = 0; k < r; ++k)
            if (xB[k] < 0) xB[k] = 0;

        const double piv = w[leave];
        Binv.row(leave) /= piv;
        for (std::size_t k = 0; k < r; ++k)
            if (k != leave && w[k] != 0.0) Binv.row(k) -= w[k] * Binv.row(leave);

        in_basis[basis[leave]] = 0;
        basis[leave] = enter;
        in_basis[enter] = 1;

        if (theta * std::abs(best == 0.0 ? 1.0 : best) <= 1e-14) {
            if (++degenerate_run >= opt.degenerate_switch) bland = true;
        } else {
            degenerate_run = 0;
            bland = false;
        }
        if (++since_refactor >= opt.refactor_every) {
            if (!refactor()) return out;
            since_refactor = 0;
        }
    }
    out.status = LpStatus::IterationLimit;
    return out;
}


std::string fmt_relax(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", v);
    return buf;
}

LpSolution solve_screened(const LpModel& model, const DualSimplexBackend::Options& opt_, double rank_tol, double relax) {
    const std::size_t m = model.num_rows();
    const std::size_t n = model.num_vars();
    LpSolution sol;
    sol.feas_tol = opt_.feas_tol;
    sol.x.assign(n, 0.0);

    Eigen::VectorXd c(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = model.objective()[j];
    const double cnorm = n ? c.cwiseAbs().maxCoeff() : 0.0;

    if (m == 0) {
        if (cnorm > 0) {
            sol.status = LpStatus::Unbounded;
            sol.message = "no rows and a nonzero objective";
        } else {
            sol.status = LpStatus::Optimal;
        }
        return sol;
    }

    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = model.row(i);
        for (std::size_t j = 0; j < n; ++j) A(i, j) = row[j];
        b[i] = model.rhs(i);
        if (model.tag(i) == RowTag::Standard) b[i] += relax * (1.0 + std::abs(b[i]));
    }

    // Columns are screened in model order, so a nested model keeps every
    // column the smaller one kept. A column whose residual against the earlier
    // ones falls below rank_tol of the largest residual gets weight zero.
    std::vector<Eigen::Index> kept, exact_dropped, near_dropped;
    {
        const Eigen::HouseholderQR<Eigen::MatrixXd> full(A);
        const Eigen::MatrixXd& packed = full.matrixQR();
        double rmax = 0.0;
        for (Eigen::Index k = 0; k < std::min<Eigen::Index>(m, n); ++k) rmax = std::max(rmax, std::abs(packed(k, k)));
        const double exact_tol =
            std::numeric_limits<double>::epsilon() * static_cast<double>(std::min(m, n)) * rmax;
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
            const double rkk = k < static_cast<Eigen::Index>(m) ? std::abs(packed(k, k)) : 0.0;
            if (rkk > rank_tol * rmax && rmax > 0) kept.push_back(k);
            else if (rkk <= exact_tol) exact_dropped.push_back(k);
            else near_dropped.push_back(k);
        }
    }
    const auto r = static_cast<Eigen::Index>(kept.size());
    if (r == 0) {
        if (cnorm > 0) {
            sol.status = LpStatus::Unbounded;
            sol.message = "objective has a component outside the row space";
            return sol;
        }
        sol.status = b.minCoeff() >= -opt_.feas_tol ? LpStatus::Optimal : LpStatus::Infeasible;
        sol.max_violation = -b.minCoeff();
        return sol;
    }

    Eigen::MatrixXd AK(m, r);
    Eigen::VectorXd cK(r);
    for (Eigen::Index k = 0; k < r; ++k) {
        AK.col(k) = A.col(kept[k]);
        cK[k] = c[kept[k]];
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(AK);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    const Eigen::VectorXd g = R.transpose().template triangularView<Eigen::Lower>().solve(cK);
    if (!exact_dropped.empty()) {
        // Only an exact null space makes the objective unbounded. Write
        // A_D = A_N T over the other columns; the objective is bounded iff
        // c_D = T^T c_N. T inherits the conditioning of R_N, so the tolerance
        // scales with it.
        std::vector<Eigen::Index> rest = kept;
        rest.insert(rest.end(), near_dropped.begin(), near_dropped.end());
        std::sort(rest.begin(), rest.end());
        const auto nr = static_cast<Eigen::Index>(rest.size());
        Eigen::MatrixXd AN(m, nr), AD(m, static_cast<Eigen::Index>(exact_dropped.size()));
        Eigen::VectorXd cN(nr), cD(AD.cols());
        for (Eigen::Index k = 0; k < nr; ++k) {
            AN.col(k) = A.col(rest[k]);
            cN[k] = c[rest[k]];
        }
        for (Eigen::Index k = 0; k < AD.cols(); ++k) {
            AD.col(k) = A.col(exact_dropped[k]);
            cD[k] = c[exact_dropped[k]];
        }
        const Eigen::HouseholderQR<Eigen::MatrixXd> qn(AN);
        const Eigen::MatrixXd RN = qn.matrixQR().topRows(nr).template triangularView<Eigen::Upper>();
        AD.applyOnTheLeft(qn.householderQ().adjoint());
        const Eigen::MatrixXd T = RN.template triangularView<Eigen::Upper>().solve(AD.topRows(nr));
        const Eigen::VectorXd cn = cD - T.transpose() * cN;
        const Eigen::VectorXd scale =
            Eigen::VectorXd::Ones(cD.size()) + cD.cwiseAbs() + T.cwiseAbs().transpose() * cN.cwiseAbs();
        const Eigen::VectorXd diag = RN.diagonal().cwiseAbs();
        const double cond = diag.maxCoeff() / diag.minCoeff();
        const double tol = std::max(1e-9, 1e2 * std::numeric_limits<double>::epsilon() * cond);
        if ((cn.cwiseAbs().array() > tol * scale.array()).any()) {
            sol.status = LpStatus::Unbounded;
            sol.message = "objective has a component outside the row space";
            return sol;
        }
    }
    if (!near_dropped.empty()) sol.message = std::to_string(near_dropped.size()) + " near-dependent column(s) fixed at zero";

    RowMat Q = RowMat::Identity(m, r);
    Q.applyOnTheLeft(qr.householderQ());

    const double M = opt_.box_scale * (1.0 + b.norm());
    CoreResult core = solve_core(Q, b, g, M, opt_);
    sol.iterations = core.iterations;
    sol.status = core.status;
    if (core.status != LpStatus::Optimal) {
        sol.message = "simplex ended with status " + to_string(core.status);
        return sol;
    }

    // x = R^-1 z can be large when columns are nearly dependent, so refine it
    // against A x = Q z with residuals accumulated in extended precision.
    Eigen::VectorXd xp = R.template triangularView<Eigen::Upper>().solve(core.z);
    const Eigen::VectorXd target = Q * core.z;
    Eigen::VectorXd res(m);
    for (int pass = 0; pass < 3; ++pass) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
            long double acc = target[i];
            for (Eigen::Index k = 0; k < r; ++k) acc -= static_cast<long double>(AK(i, k)) * xp[k];
            res[i] = static_cast<double>(acc);
        }
        if (res.cwiseAbs().maxCoeff() <= std::numeric_limits<double>::epsilon() * (1.0 + target.cwiseAbs().maxCoeff()))
            break;
        xp += R.template triangularView<Eigen::Upper>().solve(Q.transpose() * res);
    }
    for (Eigen::Index k = 0; k < r; ++k) sol.x[static_cast<std::size_t>(kept[k])] = xp[k];
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective += c[j] * sol.x[j];
    sol.max_violation = model.max_violation(sol.x);
    return sol;
}

}  // namespace

LpSolution DualSimplexBackend::solve(const LpModel& model) {
    // A kept column that is still badly conditioned can leave x infeasible
    // after the back-transform. Screening harder only removes columns, so the
    // retry stays feasible for the full model.
    double tol = opt_.rank_tol;
    LpSolution sol = solve_screened(model, opt_, tol, 0.0);
    double bscale = 1.0;
    for (std::size_t i = 0; i < model.num_rows(); ++i) bscale = std::max(bscale, std::abs(model.rhs(i)));
    while (sol.status == LpStatus::Optimal && sol.max_violation > 1e3 * opt_.feas_tol * bscale && tol < 1e-4) {
        tol *= 100.0;
        sol = solve_screened(model, opt_, tol, 0.0);
    }
    // Rows built from nearly dependent columns can be feasible only up to
    // rounding. Widen the standard rows slightly before calling the model
    // infeasible; max_violation still measures the original rows.
    for (double relax = 1e-8; sol.status == LpStatus::Infeasible && relax <= opt_.max_relax; relax *= 10.0) {
        sol = solve_screened(model, opt_, opt_.rank_tol, relax);
        if (sol.status == LpStatus::Optimal)
            sol.message = "solved with standard rows widened by " + fmt_relax(relax) + (sol.message.empty() ? "" : "; " + sol.message);
    }
    return sol;
}

std::unique_ptr<SolverBackend> make_default_backend() { return std::make_unique<DualSimplexBackend>(); }

}  // namespace falp
