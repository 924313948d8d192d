#pragma once

#include "falp/adaptive_loop.hpp"
#include "falp/gjr.hpp"
#include "falp/lower_bound.hpp"
#include "falp/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace falp {

// Malformed configuration; `where` names the field or the line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

enum class ProblemKind { Toy, Pic, Gjr };

struct RunConfig {
    ProblemKind problem = ProblemKind::Toy;
    int pic_id = 1;
    GjrSpec gjr;
    ModelKind model = ModelKind::Falp;
    std::uint64_t seed = 1;
    std::string output_dir;
    std::size_t threads = 1;

    LoopConfig loop;
    // Fourier sigma range (stumps derive theirs from the instance).
    double sigma_lo = 0.0, sigma_hi = 0.0;  // 0: problem default
    std::vector<double> thetas;              // toy presets, used before random draws
    std::size_t constraints = 5000;          // PIC uniform pairs; toy uses the full grid
    bool redraw_constraints = false;
    std::size_t saa = kPicSaaDefault;
    SimConfig sim;
    bool rollout_seed_set = false;
    bool toy_analytic_pc = true;
    LbMode lb_mode = LbMode::VfaMean;
    SaddleConfig saddle;
    bool saddle_seed_set = false;
    std::size_t visit_bins = 0;  // 0: problem default, toy 100 and PIC 10
    GjrDriverOptions gjr_opts;

    std::string problem_name() const;
};

// Parse a JSON config document; unknown keys are rejected except "run_info".
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved config; feeding it back to parse_run_config gives the same run.
nlohmann::json to_json(const RunConfig& c);

struct RunOutcome {
    int exit_code = 1;  // 0 converged, 2 cap reached, 1 error
    std::filesystem::path dir;
    LoopStatus status = LoopStatus::CapReached;
    std::string error;
};

// Runs the configured experiment into a fresh timestamped directory under
// output_dir and writes manifest.json, trace.csv, trace.json, bounds.json,
// plot CSVs and a rollout CSV.
RunOutcome run_experiment(const RunConfig& cfg);

struct SummaryRow {
    std::string problem;
    std::string model;
    std::size_t runs = 0;
    double min_gap = 0.0;
    double median_gap = 0.0;
    double max_gap = 0.0;
};

double median(std::vector<double> v);
// Groups bounds.json files of run directories by (problem, model).
std::vector<SummaryRow> summarize_runs(const std::vector<std::filesystem::path>& run_dirs);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

// "pic:<id>", "pic" (whole catalog), "toy", or "gjr:<J>:<scheme>:<z>" (seeded).
nlohmann::json instance_json(const std::string& problem, std::uint64_t seed);

}  // namespace falp
