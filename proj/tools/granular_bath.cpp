#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <json.hpp>

#include "gbath/error.hpp"
#include "gbath/experiment.hpp"

using namespace gbath;

int main(int argc, char** argv) {
    CLI::App app{"Granular gas in a thermal bath: steady states, elastic limit and spectral checks"};
    app.require_subcommand(1, 1);
    std::string configPath, outDir, resume;
    std::uint64_t seed = 0;
    int workers = 0;
    for (auto s : {Scenario::simulate, Scenario::sweep_alpha, Scenario::uniqueness, Scenario::spectral,
                   Scenario::verify_kernel, Scenario::verify_moments}) {
        auto* sub = app.add_subcommand(to_string(s), "run the " + to_string(s) + " scenario");
        sub->add_option("--config", configPath, "JSON experiment config")->required();
        sub->add_option("--out", outDir, "output directory");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        if (s == Scenario::simulate) sub->add_option("--resume", resume, "continue from a .gben snapshot");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_codes::config_error;
    }
    auto* sub = app.get_subcommands().front();
    const auto scenario = scenario_from_string(sub->get_name());

    ExperimentConfig cfg;
    try {
        std::ifstream is(configPath);
        if (!is) throw InputError("cannot read config file " + configPath);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config is not valid JSON: " + std::string(e.what()));
        }
        if (!outDir.empty()) j["outputDir"] = outDir;
        if (sub->count("--seed")) j["sim"]["seed"] = seed;
        if (sub->count("--workers")) j["sim"]["workers"] = workers;
        if (!resume.empty()) j["resumeFrom"] = resume;
        cfg = ExperimentConfig::from_json(j, scenario);
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_codes::config_error;
    }

    try {
        const auto rep = run_experiment(cfg);
        for (const auto& c : rep.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.id << ": " << c.description << '\n';
        if (!rep.allConverged) std::cout << "NOT CONVERGED: at least one run missed its steady-state tolerance\n";
        std::cout << "report: " << cfg.outputDir << "/report.json (" << rep.wallClock << " s)\n";
        return rep.exit_code();
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_codes::config_error;
    } catch (const IoError& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return exit_codes::output_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
