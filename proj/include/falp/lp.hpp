#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace falp {

enum class RowTag { Standard, SelfGuiding, Bound };

std::string to_string(RowTag tag);
RowTag row_tag_from_string(const std::string& s);

// maximize objective·x subject to rows·x <= rhs, x free.
class LpModel {
public:
    explicit LpModel(std::size_t num_vars = 0) : num_vars_(num_vars), objective_(num_vars, 0.0) {}

    std::size_t num_vars() const { return num_vars_; }
    std::size_t num_rows() const { return rhs_.size(); }

    std::vector<double>& objective() { return objective_; }
    const std::vector<double>& objective() const { return objective_; }

    void add_row(const double* coeffs, double rhs, RowTag tag = RowTag::Standard);
    void add_row(const std::vector<double>& coeffs, double rhs, RowTag tag = RowTag::Standard);
    void reserve(std::size_t rows);

    const double* row(std::size_t i) const { return coeffs_.data() + i * num_vars_; }
    double rhs(std::size_t i) const { return rhs_[i]; }
    RowTag tag(std::size_t i) const { return tags_[i]; }
    std::size_t count(RowTag tag) const;

    // Largest value of row·x - rhs over rows carrying `tag` (all rows if tag is null).
    double max_violation(const std::vector<double>& x, const RowTag* tag = nullptr) const;

private:
    std::size_t num_vars_;
    std::vector<double> objective_;
    std::vector<double> coeffs_;
    std::vector<double> rhs_;
    std::vector<RowTag> tags_;
};

// Plain-text interchange format, see docs/formats.md.
void write_lp(std::ostream& os, const LpModel& model);
LpModel read_lp(std::istream& is);

enum class LpStatus { Optimal, Infeasible, Unbounded, Numeric, IterationLimit };
std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::Numeric;
    std::vector<double> x;
    double objective = 0.0;
    double max_violation = 0.0;  // over all rows at x
    double feas_tol = 0.0;       // tolerance the backend worked to
    std::size_t iterations = 0;
    std::string message;
};

class SolverBackend {
public:
    virtual ~SolverBackend() = default;
    virtual LpSolution solve(const LpModel& model) = 0;
    virtual std::string name() const = 0;
};

// Revised primal simplex applied to the dual of the model, after an
// orthogonal change of variables (column-pivoted QR of the row matrix) so
// that badly conditioned feature columns do not reach the basis factors.
class DualSimplexBackend : public SolverBackend {
public:
    struct Options {
        double feas_tol = 1e-9;
        double pivot_tol = 1e-11;
        // Columns whose QR pivot falls below rank_tol * |largest pivot| are
        // treated as dependent and get weight zero.
        double rank_tol = 1e-8;
        // An infeasible verdict is retried with the rhs of standard rows
        // widened by relax * (1 + |rhs|), relax = 1e-8, 1e-7, ... up to max_relax.
        double max_relax = 1e-6;
        double box_scale = 1e6;  // artificial box |z| <= box_scale * (1 + |rhs|_2)
        std::size_t refactor_every = 64;
        std::size_t max_iterations = 0;  // 0: automatic
        std::size_t degenerate_switch = 50;
    };

    DualSimplexBackend() = default;
    explicit DualSimplexBackend(Options opt) : opt_(opt) {}

    LpSolution solve(const LpModel& model) override;
    std::string name() const override { return "dual-simplex-qr"; }

private:
    Options opt_;
};

std::unique_ptr<SolverBackend> make_default_backend();

}  // namespace falp
