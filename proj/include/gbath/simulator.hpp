#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbath/background.hpp"
#include "gbath/diagnostics.hpp"
#include "gbath/ensemble.hpp"

namespace gbath {

struct InitialCondition {
    enum class Kind { maxwellian, bimodal, uniform_ball };
    Kind kind = Kind::maxwellian;
    double theta = 1.0;  // maxwellian
    Velocity u{};
    double theta1 = 0.5;  // bimodal: two Maxwellians centred at -/+ separation/2 along x
    double theta2 = 2.0;
    double separation = 3.0;
    double radius = 3.0;  // uniform ball

    std::string label() const;
    nlohmann::json to_json() const;
    static InitialCondition from_json(const nlohmann::json& j);
};

struct SimConfig {
    double alpha = 1.0;
    BathParams bath{};
    std::uint64_t N = 100000;
    double mass = 1.0;
    double dt = 0.02;
    double vMaxMajorant = 0.0;  // 0: 12 sqrt(max(theta0, initial temperature))
    std::uint64_t seed = 1;
    double tEnd = 200.0;
    double steadyTolerance = 0.0;  // 0: three single-snapshot standard errors
    double snapshotInterval = 1.0;
    int windowSnapshots = 20;
    int averageSnapshots = 10;
    bool enableCollisions = true;
    bool enableBath = true;
    int workers = 1;
    InitialCondition initial{};

    void validate() const;
    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
};

struct MajorantEvent {
    std::uint64_t step = 0;
    std::string phase;
    double from = 0.0;
    double to = 0.0;
};

struct StepStats {
    std::uint64_t collisionCandidates = 0;
    std::uint64_t collisionsAccepted = 0;
    std::uint64_t bathCandidates = 0;
    std::uint64_t bathAccepted = 0;
    std::vector<MajorantEvent> majorantEvents;

    void merge(const StepStats& o);
};

ParticleEnsemble sample_initial(const SimConfig& config);

// One splitting step: pair collisions, then bath collisions. Mutates the ensemble in place.
void step(ParticleEnsemble& ensemble, const SimConfig& config, StepStats* stats = nullptr);

struct ConvergenceRecord {
    double time = 0.0;
    std::array<double, 5> m{};  // m_0 .. m_4
    double drift1 = 0.0;
    double drift2 = 0.0;
    double tolerance1 = 0.0;
    double tolerance2 = 0.0;
    double collisionAcceptance = 0.0;
    double bathAcceptance = 0.0;
};

struct SteadyState {
    ParticleEnsemble ensemble;             // pooled tail snapshots
    std::vector<ParticleEnsemble> window;  // the pooled snapshots, oldest first
    ParticleEnsemble live;                 // state at the last step, for resuming
    MomentTable momentTable;
    std::vector<ConvergenceRecord> convergenceLog;
    std::vector<MajorantEvent> majorantEvents;
    bool converged = false;
    double time = 0.0;
};

using SnapshotSink = std::function<void(const ParticleEnsemble&)>;

// Marches until the trailing-window drift of m_1 and m_2 drops below tolerance or tEnd is hit.
SteadyState run_to_steady(const SimConfig& config, const ParticleEnsemble* start = nullptr,
                          const SnapshotSink& sink = {});

// Moments at every snapshot up to tEnd.
std::vector<MomentTable> moment_trajectory(const SimConfig& config, const std::vector<double>& pList,
                                           const ParticleEnsemble* start = nullptr);

std::string convergence_csv(const std::vector<ConvergenceRecord>& log);

}  // namespace gbath
