#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbath/simulator.hpp"

namespace gbath {

enum class Scenario { simulate, sweep_alpha, uniqueness, spectral, verify_kernel, verify_moments };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct DiagnosticsOptions {
    int nShells = 0;                  // L1 shells; 0 selects sqrt(N)
    double distanceRadius = 5.0;      // in units of sqrt(theta0)
    double envelopeRadius = 5.0;      // in units of sqrt(theta0)
    int envelopePoints = 80;
    std::uint64_t entropySamples = 100000;
    int entropyShells = 0;            // 0 selects the cube root of the pooled sample size
    double weightA = 0.1;
    double weightS = 0.5;
    double momentB = 0.5;
};

struct SpectralOptions {
    int gridSize = 200;
    std::vector<double> eList{0.3, 0.5, 0.8, 1.0};
};

struct ExperimentConfig {
    Scenario scenario = Scenario::simulate;
    SimConfig sim{};
    std::vector<double> alphaList{0.8, 0.9, 0.95, 0.99};
    std::vector<InitialCondition> initialConditions;
    DiagnosticsOptions diagnostics{};
    SpectralOptions spectral{};
    std::string outputDir = "granular-bath-out";
    std::optional<std::string> resumeFrom;
    bool writeSnapshots = true;

    void validate() const;
    nlohmann::json to_json() const;
    // Keys absent from j keep their defaults; unknown keys are rejected.
    static ExperimentConfig from_json(const nlohmann::json& j, std::optional<Scenario> scenario = std::nullopt);
    std::string hash() const;  // FNV-1a of the materialized config
};

// Default initial conditions of the uniqueness trial: hot and cold Maxwellians and a bimodal state.
std::vector<InitialCondition> default_uniqueness_conditions(const BathParams& bath);

struct CheckResult {
    std::string id;           // acceptance criterion number or a named property
    std::string description;
    bool pass = false;
    nlohmann::json detail;
};

struct ExperimentReport {
    Scenario scenario = Scenario::simulate;
    nlohmann::json config;
    std::string configHash;
    std::string provenance;
    std::vector<CheckResult> checks;
    nlohmann::json runs = nlohmann::json::array();
    nlohmann::json extra = nlohmann::json::object();
    bool allConverged = true;
    double wallClock = 0.0;

    const CheckResult* find(const std::string& id) const;
    bool passed() const;
    int exit_code() const;  // 0 pass, 2 check failure, 3 non-convergence
    nlohmann::json to_json() const;
};

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int check_failure = 2;
inline constexpr int non_convergence = 3;
inline constexpr int config_error = 4;
inline constexpr int output_error = 5;
}  // namespace exit_codes

std::string provenance();
std::string fnv1a_hex(const std::string& data);

// Runs the scenario and writes its artifacts under config.outputDir.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace gbath
