#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "gbath/error.hpp"
#include "gbath/experiment.hpp"
#include "gbath/snapshot.hpp"

using namespace gbath;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gbath_exp_" + name);
    fs::remove_all(p);
    return p;
}

json small_sim(double alpha = 0.9) {
    return {{"alpha", alpha}, {"N", 3000}, {"bath", {{"theta0", 1.0}, {"e", 0.5}}}, {"tEnd", 3.0},
            {"windowSnapshots", 2}, {"averageSnapshots", 2}, {"seed", 8}};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GBATH_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

}  // namespace

TEST_CASE("scenario names round trip") {
    for (auto s : {Scenario::simulate, Scenario::sweep_alpha, Scenario::uniqueness, Scenario::spectral,
                   Scenario::verify_kernel, Scenario::verify_moments})
        CHECK(scenario_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(scenario_from_string("sweep"), InputError);
}

TEST_CASE("config parsing materializes defaults and rejects bad input") {
    const auto c = ExperimentConfig::from_json({{"scenario", "uniqueness"}, {"sim", small_sim(0.95)}});
    CHECK(c.initialConditions.size() == 3);
    CHECK(c.alphaList == std::vector<double>{0.95});
    const auto j = c.to_json();
    CHECK(j.at("diagnostics").at("distanceRadius") == 5.0);
    CHECK(j.at("sim").at("dt") == 0.02);
    CHECK(ExperimentConfig::from_json(j).to_json() == j);

    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "spectral"}, {"bogus", 1}}), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"sim", small_sim()}}), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "spectral"}}, Scenario::simulate), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "sweep-alpha"}, {"alphaList", {0.5, 1.2}}}), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "sweep-alpha"}, {"alphaList", {0.5}}}), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "spectral"}, {"spectral", {{"eList", {0.0}}}}}), InputError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"scenario", "spectral"}, {"diagnostics", {{"nshells", 3}}}}), InputError);
}

TEST_CASE("config hash ignores the output location and worker count only") {
    auto a = ExperimentConfig::from_json({{"scenario", "simulate"}, {"sim", small_sim()}});
    auto b = a;
    b.outputDir = "elsewhere";
    b.sim.workers = 4;
    CHECK(a.hash() == b.hash());
    b.sim.seed = 9;
    CHECK(a.hash() != b.hash());
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("verify-kernel writes a self-contained report") {
    const auto dir = scratch("vk");
    auto c = ExperimentConfig::from_json({{"scenario", "verify-kernel"}, {"sim", small_sim()}, {"outputDir", dir.string()}});
    const auto rep = run_experiment(c);
    for (const char* id : {"2", "3", "7"}) CHECK(rep.find(id) != nullptr);
    CHECK(rep.find("2")->pass);
    CHECK(rep.find("3")->pass);
    CHECK(rep.exit_code() == (rep.passed() ? exit_codes::ok : exit_codes::check_failure));
    std::ifstream is(dir / "report.json");
    const auto j = json::parse(is);
    CHECK(j.at("configHash") == c.hash());
    CHECK(j.at("config") == c.to_json());
    CHECK(j.at("checks").size() == rep.checks.size());
    fs::remove_all(dir);
}

TEST_CASE("a run that cannot fill its window reports non-convergence") {
    const auto dir = scratch("nc");
    auto sim = small_sim();
    sim["windowSnapshots"] = 20;
    sim["tEnd"] = 2.0;
    auto c = ExperimentConfig::from_json({{"scenario", "simulate"}, {"sim", sim}, {"outputDir", dir.string()}});
    const auto rep = run_experiment(c);
    CHECK_FALSE(rep.allConverged);
    CHECK(rep.exit_code() == exit_codes::non_convergence);
    CHECK(fs::exists(dir / "moments.csv"));
    CHECK(fs::exists(dir / "density.csv"));
    CHECK(fs::exists(dir / "snapshots" / "run.gben"));

    // resuming under a different alpha is refused with the differing field named
    auto other = c;
    other.sim.alpha = 0.8;
    other.resumeFrom = (dir / "snapshots" / "run.gben").string();
    try {
        run_experiment(other);
        CHECK(false);
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("unwritable output directory is an output error") {
    auto c = ExperimentConfig::from_json({{"scenario", "verify-kernel"}, {"outputDir", "/proc/gbath-no-such-dir"}});
    CHECK_THROWS_AS(run_experiment(c), IoError);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const auto good = dir / "vk.json", bad = dir / "bad.json", unknown = dir / "unknown.json";
    write_file(good, json{{"scenario", "verify-kernel"}, {"sim", small_sim()}}.dump());
    write_file(bad, "{ not json");
    write_file(unknown, json{{"scenario", "verify-kernel"}, {"colour", "red"}}.dump());
    CHECK(run_cli("verify-kernel --config " + (dir / "missing.json").string()) == exit_codes::config_error);
    CHECK(run_cli("verify-kernel --config " + bad.string()) == exit_codes::config_error);
    CHECK(run_cli("verify-kernel --config " + unknown.string()) == exit_codes::config_error);
    CHECK(run_cli("no-such-scenario --config " + good.string()) == exit_codes::config_error);
    CHECK(run_cli("spectral --config " + good.string()) == exit_codes::config_error);
    CHECK(run_cli("verify-kernel --config " + good.string() + " --out /proc/gbath-no-such-dir") ==
          exit_codes::output_error);
    const int rc = run_cli("verify-kernel --config " + good.string() + " --out " + (dir / "out").string() + " --seed 5");
    CHECK((rc == exit_codes::ok || rc == exit_codes::check_failure));
    std::ifstream is(dir / "out" / "report.json");
    const auto j = json::parse(is);
    CHECK(j.at("seed") == 5);
    CHECK(j.at("exitCode") == rc);
    fs::remove_all(dir);
}
