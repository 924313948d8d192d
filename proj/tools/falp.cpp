#include "falp/experiment.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Reads the config text and applies command-line overrides before parsing,
// so derived seeds follow the overridden master seed.
falp::RunConfig load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                                    std::optional<std::size_t> threads) {
    std::ifstream in(path);
    if (!in) throw falp::ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    if (!seed && !threads) return falp::parse_run_config_text(ss.str());
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error&) {
        return falp::parse_run_config_text(ss.str());
    }
    if (!j.is_object()) throw falp::ConfigError("config", "expected a JSON object");
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    return falp::parse_run_config(j);
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::size_t> threads) {
    falp::RunConfig cfg;
    try {
        cfg = load_with_overrides(config, seed, threads);
    } catch (const falp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    falp::RunOutcome out;
    try {
        out = falp::run_experiment(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << out.dir.string() << '\n';
    std::cout << "status: " << falp::to_string(out.status) << '\n';
    if (!out.error.empty()) std::cerr << "error: " << out.error << '\n';
    return out.exit_code;
}

int cmd_validate(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::size_t> threads) {
    try {
        const falp::RunConfig cfg = load_with_overrides(config, seed, threads);
        std::cout << std::setw(2) << falp::to_json(cfg) << '\n';
        return 0;
    } catch (const falp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_summarize(const std::vector<std::string>& dirs, const std::string& output) {
    try {
        std::vector<fs::path> paths(dirs.begin(), dirs.end());
        const auto rows = falp::summarize_runs(paths);
        if (output.empty()) {
            falp::write_summary_csv(std::cout, rows);
        } else {
            std::ofstream out(output);
            falp::write_summary_csv(out, rows);
            if (!out) throw std::runtime_error("cannot write " + output);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_print_instance(const std::string& problem, std::uint64_t seed) {
    try {
        std::cout << std::setw(2) << falp::instance_json(problem, seed) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-feature approximate linear programs for MDPs and semi-MDPs"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;

    auto* run = app.add_subcommand("run", "Run an experiment into a fresh timestamped directory");
    run->add_option("--config", config, "JSON run configuration")->required();
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--threads", threads, "Override the worker count");

    auto* validate = app.add_subcommand("validate-config", "Parse a config and print the resolved form");
    validate->add_option("--config", config, "JSON run configuration")->required();
    validate->add_option("--seed", seed, "Override the master seed");
    validate->add_option("--threads", threads, "Override the worker count");

    std::vector<std::string> dirs;
    std::string output;
    auto* summarize = app.add_subcommand("summarize", "Min/median/max gap per problem and model");
    summarize->add_option("run_dirs", dirs, "Run directories")->required();
    summarize->add_option("-o,--output", output, "CSV file (default: stdout)");

    std::string problem = "pic";
    std::uint64_t instance_seed = 1;
    auto* print = app.add_subcommand("print-instance", "Print instance parameters as JSON");
    print->add_option("--problem", problem, "pic, pic:<id>, toy or gjr:<J>:<scheme>:<z>");
    print->add_option("--seed", instance_seed, "Seed for generated instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*run) return cmd_run(config, seed, threads);
    if (*validate) return cmd_validate(config, seed, threads);
    if (*summarize) return cmd_summarize(dirs, output);
    if (*print) return cmd_print_instance(problem, instance_seed);
    return 1;
}
