#include "doctest.h"

#include "falp/experiment.hpp"

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace falp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("falp_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string toy_config(const fs::path& out, double tau, const std::string& thetas, int max_bases) {
    return R"({"problem": "toy", "seed": 1, "output_dir": ")" + out.string() + R"(",
  "loop": {"batch": 1, "tau": )" + std::to_string(tau) + R"(, "max_bases": )" + std::to_string(max_bases) + R"(},
  "bases": {"thetas": )" + thetas + "}}";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FALP_CLI) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path only_run_dir(const fs::path& out) {
    fs::path found;
    int n = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.is_directory()) found = e.path(), ++n;
    REQUIRE(n == 1);
    return found;
}

void write_bounds(const fs::path& dir, double gap) {
    fs::create_directories(dir);
    spit(dir / "bounds.json", R"({"version": 1, "problem": "pic:1", "model": "falp", "tau_star": )" + std::to_string(gap) + "}");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config diagnostics name the field or line") {
    CHECK_THROWS_WITH_AS(parse_run_config_text(R"({"problem": "toy"})"), "output_dir: required field is missing",
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config_text("{\n \"problem\": \"toy\",\n \"output_dir\": \"x\",\n}"),
                         "line 4: JSON syntax error", ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config_text(R"({"problem": "toy", "output_dir": "x", "loop": {"tua": 1}})"),
                         "loop.tua: unknown field", ConfigError);
    CHECK_THROWS_AS(parse_run_config_text(R"({"problem": "pic:17", "output_dir": "x"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config_text(R"({"problem": "toy", "output_dir": "x", "loop": {"tau": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config_text(R"({"problem": "toy", "output_dir": "x", "seed": "one"})"), ConfigError);
    try {
        parse_run_config_text(R"({"problem": "toy", "output_dir": "x", "model": "glp"})");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.where() == "model");
    }
}

TEST_CASE("resolved config round trips") {
    const RunConfig c = parse_run_config_text(R"({"problem": "pic:3", "output_dir": "o", "seed": 42})");
    CHECK(c.pic_id == 3);
    CHECK(c.lb_mode == LbMode::Saddle);
    const RunConfig d = parse_run_config(to_json(c));
    CHECK(to_json(d) == to_json(c));
    CHECK(d.saddle.seed == c.saddle.seed);
    CHECK(d.sim.rollout_seed == c.sim.rollout_seed);
    const RunConfig e = parse_run_config_text(R"({"problem": "pic:3", "output_dir": "o", "seed": 43})");
    CHECK(e.saddle.seed != c.saddle.seed);
}

TEST_CASE("missing output_dir exits 1") {
    const fs::path dir = scratch("missing");
    spit(dir / "c.json", R"({"problem": "toy"})");
    CHECK(run_cli("run --config " + (dir / "c.json").string()) == 1);
    CHECK(run_cli("validate-config --config " + (dir / "nope.json").string()) == 1);
}

TEST_CASE("exit codes follow the loop status") {
    const fs::path dir = scratch("codes");
    spit(dir / "ok.json", toy_config(dir / "ok", 1.0, "[2, -5]", 2));
    spit(dir / "cap.json", toy_config(dir / "cap", 0.01, "[2, -5]", 2));
    CHECK(run_cli("run --config " + (dir / "ok.json").string()) == 0);
    CHECK(run_cli("run --config " + (dir / "cap.json").string()) == 2);
    const auto b = nlohmann::json::parse(slurp(only_run_dir(dir / "cap") / "bounds.json"));
    CHECK(b["status"] == "cap_reached");
    CHECK(b["N"] == 2);
}

TEST_CASE("identical runs and manifest re-runs give byte-identical traces") {
    const fs::path dir = scratch("determinism");
    spit(dir / "c.json", toy_config(dir / "a", 0.01, "[2, -5, 3]", 3));
    REQUIRE(run_cli("run --config " + (dir / "c.json").string()) == 2);
    REQUIRE(run_cli("run --config " + (dir / "c.json").string() + " --seed 1") == 2);
    std::vector<fs::path> runs;
    for (const auto& e : fs::directory_iterator(dir / "a")) runs.push_back(e.path());
    REQUIRE(runs.size() == 2);
    const std::string trace = slurp(runs[0] / "trace.csv");
    CHECK(trace.rfind("# trace v1\n", 0) == 0);
    CHECK(slurp(runs[1] / "trace.csv") == trace);
    REQUIRE(run_cli("run --config " + (runs[0] / "manifest.json").string()) == 2);
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++count;
        CHECK(slurp(e.path() / "trace.csv") == trace);
    }
    CHECK(count == 3);
    for (const char* f : {"manifest.json", "bounds.json", "trace.json", "vfa_curve.csv", "visit_frequency.csv"})
        CHECK(fs::exists(runs[0] / f));
}

TEST_CASE("seed override changes the derived seeds") {
    const fs::path dir = scratch("seed");
    spit(dir / "c.json", toy_config(dir / "out", 0.01, "[2]", 2));
    REQUIRE(run_cli("run --config " + (dir / "c.json").string() + " --seed 77") == 2);
    const auto m = nlohmann::json::parse(slurp(only_run_dir(dir / "out") / "manifest.json"));
    CHECK(m["seed"] == 77);
    CHECK(m["lower_bound"]["seed"] == to_json(parse_run_config_text(
                                               R"({"problem": "toy", "output_dir": "x", "seed": 77})"))["lower_bound"]["seed"]);
}

TEST_CASE("summary aggregation") {
    const fs::path dir = scratch("summary");
    write_bounds(dir / "one", 0.07);
    auto rows = summarize_runs({dir / "one"});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].min_gap == rows[0].median_gap);
    CHECK(rows[0].median_gap == rows[0].max_gap);
    CHECK_THROWS(summarize_runs({}));
    write_bounds(dir / "g1", 1);
    write_bounds(dir / "g2", 2);
    write_bounds(dir / "g9", 9);
    rows = summarize_runs({dir / "g9", dir / "g1", dir / "g2"});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].runs == 3);
    CHECK(rows[0].min_gap == 1);
    CHECK(rows[0].median_gap == 2);
    CHECK(rows[0].max_gap == 9);
    fs::create_directories(dir / "bad");
    spit(dir / "bad" / "bounds.json", R"({"version": 2, "gap": 1})");
    CHECK_THROWS(summarize_runs({dir / "g1", dir / "bad"}));
    CHECK_THROWS(summarize_runs({dir / "absent"}));
    CHECK(median({4, 1, 3, 2}) == 2.5);
    std::stringstream ss;
    write_summary_csv(ss, rows);
    CHECK(ss.str().find("pic:1,falp,3,") != std::string::npos);
    CHECK(run_cli("summarize " + (dir / "g1").string() + " " + (dir / "g2").string() + " -o " +
                  (dir / "s.csv").string()) == 0);
    CHECK(fs::exists(dir / "s.csv"));
    CHECK(run_cli("summarize") == 1);
}

TEST_CASE("instance JSON") {
    CHECK(instance_json("pic:4", 1)["c_o"].is_number());
    CHECK(instance_json("pic", 1)["instances"].size() == 16);
    CHECK(instance_json("toy", 1)["gamma"] == 0.9);
    const auto g = instance_json("gjr:3:discrete:60", 5);
    CHECK(g["params"]["J"] == 3);
    CHECK(g == instance_json("gjr:3:discrete:60", 5));
    CHECK_THROWS(instance_json("pic:0", 1));
    CHECK_THROWS(instance_json("cartpole", 1));
    CHECK(run_cli("print-instance --problem pic:1") == 0);
}

}  // TEST_SUITE
