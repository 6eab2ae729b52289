#include "gbath/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "gbath/background.hpp"
#include "gbath/diagnostics.hpp"
#include "gbath/error.hpp"
#include "gbath/kinematics.hpp"
#include "gbath/rng.hpp"
#include "gbath/snapshot.hpp"
#include "gbath/spectral.hpp"

#ifndef GBATH_GIT_REVISION
#define GBATH_GIT_REVISION "unknown"
#endif

namespace gbath {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::simulate: return "simulate";
        case Scenario::sweep_alpha: return "sweep-alpha";
        case Scenario::uniqueness: return "uniqueness";
        case Scenario::spectral: return "spectral";
        case Scenario::verify_kernel: return "verify-kernel";
        case Scenario::verify_moments: return "verify-moments";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    for (auto s : {Scenario::simulate, Scenario::sweep_alpha, Scenario::uniqueness, Scenario::spectral,
                   Scenario::verify_kernel, Scenario::verify_moments})
        if (to_string(s) == name) return s;
    throw InputError("unknown scenario '" + name + "'");
}

std::vector<InitialCondition> default_uniqueness_conditions(const BathParams& bath) {
    InitialCondition hot, cold, bimodal;
    hot.kind = cold.kind = InitialCondition::Kind::maxwellian;
    hot.theta = 2.5 * bath.theta0;
    cold.theta = 0.2 * bath.theta0;
    bimodal.kind = InitialCondition::Kind::bimodal;
    bimodal.theta1 = 0.3 * bath.theta0;
    bimodal.theta2 = 0.3 * bath.theta0;
    bimodal.separation = 3.0 * std::sqrt(bath.theta0);
    return {hot, cold, bimodal};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw InputError(what + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw InputError(what + ": unknown key '" + it.key() + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    sim.validate();
    for (double a : alphaList)
        if (!(a > 0.0 && a <= 1.0)) throw InputError("config: every alpha must lie in (0,1]");
    if (scenario == Scenario::sweep_alpha && alphaList.size() < 2)
        throw InputError("config: sweep-alpha needs at least two alphas");
    if (scenario == Scenario::uniqueness && initialConditions.size() == 1)
        throw InputError("config: uniqueness needs at least two initial conditions");
    if (spectral.gridSize < 20 || spectral.gridSize > 400) throw InputError("config: spectral gridSize outside [20, 400]");
    for (double e : spectral.eList)
        if (!(e > 0.0 && e <= 1.0)) throw InputError("config: spectral e outside (0,1]");
    if (diagnostics.nShells < 0 || diagnostics.entropyShells < 0) throw InputError("config: shell counts must be >= 0");
    if (!(diagnostics.distanceRadius > 0.0 && diagnostics.envelopeRadius > 0.0))
        throw InputError("config: radii must be positive");
    if (diagnostics.envelopePoints < 4) throw InputError("config: envelopePoints must be >= 4");
    if (diagnostics.entropySamples < 100) throw InputError("config: entropySamples must be >= 100");
    if (!(diagnostics.weightA > 0.0) || !(diagnostics.weightS > 0.0 && diagnostics.weightS <= 1.0))
        throw InputError("config: weight parameters need a > 0 and s in (0,1]");
    if (!(diagnostics.momentB > 0.0 && diagnostics.momentB < 1.0)) throw InputError("config: momentB outside (0,1)");
    if (outputDir.empty()) throw InputError("config: empty output directory");
}

json ExperimentConfig::to_json() const {
    json ics = json::array();
    for (const auto& ic : initialConditions) ics.push_back(ic.to_json());
    json j{{"scenario", to_string(scenario)},
           {"sim", sim.to_json()},
           {"alphaList", alphaList},
           {"initialConditions", ics},
           {"diagnostics",
            {{"nShells", diagnostics.nShells},
             {"distanceRadius", diagnostics.distanceRadius},
             {"envelopeRadius", diagnostics.envelopeRadius},
             {"envelopePoints", diagnostics.envelopePoints},
             {"entropySamples", diagnostics.entropySamples},
             {"entropyShells", diagnostics.entropyShells},
             {"weightA", diagnostics.weightA},
             {"weightS", diagnostics.weightS},
             {"momentB", diagnostics.momentB}}},
           {"spectral", {{"gridSize", spectral.gridSize}, {"eList", spectral.eList}}},
           {"outputDir", outputDir},
           {"writeSnapshots", writeSnapshots}};
    j["resumeFrom"] = resumeFrom ? json(*resumeFrom) : json(nullptr);
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, std::optional<Scenario> scenario) {
    reject_unknown(j, {"scenario", "sim", "alphaList", "initialConditions", "diagnostics", "spectral", "outputDir",
                       "writeSnapshots", "resumeFrom"},
                   "config");
    ExperimentConfig c;
    try {
        if (j.contains("scenario")) {
            c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
            if (scenario && *scenario != c.scenario)
                throw InputError("config: scenario '" + to_string(c.scenario) + "' does not match requested '" +
                                 to_string(*scenario) + "'");
        } else if (scenario) {
            c.scenario = *scenario;
        } else {
            throw InputError("config: no scenario given");
        }
        if (j.contains("sim")) c.sim = SimConfig::from_json(j.at("sim"));
        if (j.contains("alphaList")) c.alphaList = j.at("alphaList").get<std::vector<double>>();
        if (j.contains("initialConditions")) {
            for (const auto& ic : j.at("initialConditions")) c.initialConditions.push_back(InitialCondition::from_json(ic));
        }
        if (j.contains("diagnostics")) {
            const auto& d = j.at("diagnostics");
            reject_unknown(d, {"nShells", "distanceRadius", "envelopeRadius", "envelopePoints", "entropySamples",
                               "entropyShells", "weightA", "weightS", "momentB"},
                           "diagnostics");
            auto& o = c.diagnostics;
            o.nShells = d.value("nShells", o.nShells);
            o.distanceRadius = d.value("distanceRadius", o.distanceRadius);
            o.envelopeRadius = d.value("envelopeRadius", o.envelopeRadius);
            o.envelopePoints = d.value("envelopePoints", o.envelopePoints);
            o.entropySamples = d.value("entropySamples", o.entropySamples);
            o.entropyShells = d.value("entropyShells", o.entropyShells);
            o.weightA = d.value("weightA", o.weightA);
            o.weightS = d.value("weightS", o.weightS);
            o.momentB = d.value("momentB", o.momentB);
        }
        if (j.contains("spectral")) {
            const auto& s = j.at("spectral");
            reject_unknown(s, {"gridSize", "eList"}, "spectral");
            c.spectral.gridSize = s.value("gridSize", c.spectral.gridSize);
            if (s.contains("eList")) c.spectral.eList = s.at("eList").get<std::vector<double>>();
        }
        c.outputDir = j.value("outputDir", c.outputDir);
        c.writeSnapshots = j.value("writeSnapshots", c.writeSnapshots);
        if (j.contains("resumeFrom") && !j.at("resumeFrom").is_null())
            c.resumeFrom = j.at("resumeFrom").get<std::string>();
    } catch (const json::exception& ex) {
        throw InputError(std::string("config: ") + ex.what());
    }
    if (c.scenario == Scenario::uniqueness) {
        if (c.initialConditions.empty()) c.initialConditions = default_uniqueness_conditions(c.sim.bath);
        if (!j.contains("alphaList")) c.alphaList = {c.sim.alpha};
    }
    c.validate();
    return c;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string ExperimentConfig::hash() const {
    auto j = to_json();
    j.erase("outputDir");
    j["sim"].erase("workers");
    return fnv1a_hex(j.dump());
}

std::string provenance() { return std::string("granular-bath 0.1.0 (git ") + GBATH_GIT_REVISION + ")"; }

// ---------------------------------------------------------------- report

const CheckResult* ExperimentReport::find(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

bool ExperimentReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

int ExperimentReport::exit_code() const {
    if (!allConverged) return exit_codes::non_convergence;
    return passed() ? exit_codes::ok : exit_codes::check_failure;
}

json ExperimentReport::to_json() const {
    json table = json::array();
    for (const auto& c : checks)
        table.push_back({{"id", c.id}, {"description", c.description}, {"pass", c.pass}, {"detail", c.detail}});
    return {{"scenario", to_string(scenario)},
            {"config", config},
            {"configHash", configHash},
            {"seed", config.at("sim").at("seed")},
            {"provenance", provenance},
            {"checks", table},
            {"runs", runs},
            {"extra", extra},
            {"allConverged", allConverged},
            {"passed", passed()},
            {"exitCode", exit_code()},
            {"wallClockSeconds", wallClock}};
}

// ---------------------------------------------------------------- scenarios

namespace {

struct Output {
    fs::path dir;
    bool snapshots = true;

    void write(const std::string& name, const std::string& text) const {
        std::ofstream os(dir / name, std::ios::trunc);
        if (!os || !(os << text)) throw IoError("cannot write " + (dir / name).string());
    }
    fs::path snapshot_dir() const { return dir / "snapshots"; }
};

Output prepare_output(const ExperimentConfig& cfg) {
    Output out{fs::path(cfg.outputDir), cfg.writeSnapshots};
    std::error_code ec;
    fs::create_directories(out.dir, ec);
    if (cfg.writeSnapshots) fs::create_directories(out.snapshot_dir(), ec);
    const auto probe = out.dir / ".write-probe";
    {
        std::ofstream os(probe);
        if (!os || !(os << "ok")) throw IoError("output directory is not writable: " + out.dir.string());
    }
    fs::remove(probe, ec);
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string density_csv(const RadialDensity& d) {
    std::ostringstream os;
    os << "shell_radius,value,error\n" << std::setprecision(17);
    for (int i = 0; i < d.size(); ++i) os << d.center(i) << ',' << d.values[i] << ',' << d.errors[i] << '\n';
    return os.str();
}

std::string label_for(double alpha) {
    std::ostringstream os;
    os << "alpha_" << alpha;
    return os.str();
}

int shells_for(const ExperimentConfig& cfg) {
    return cfg.diagnostics.nShells > 0 ? cfg.diagnostics.nShells
                                       : std::max(1, static_cast<int>(std::lround(std::sqrt(double(cfg.sim.N)))));
}

// One steady run with rolling snapshots of the live ensemble.
SteadyState steady_run(const SimConfig& sim, const Output& out, const std::string& label,
                       const ParticleEnsemble* start = nullptr) {
    SnapshotSink sink;
    if (out.snapshots) {
        const auto path = out.snapshot_dir() / (label + ".gben");
        sink = [path, &sim](const ParticleEnsemble& e) { write_snapshot(path, e, sim); };
    }
    auto ss = run_to_steady(sim, start, sink);
    if (out.snapshots) write_snapshot(out.snapshot_dir() / (label + ".gben"), ss.live, sim);
    return ss;
}

json tail_json(const TailFit& t) {
    return {{"s", t.s}, {"r", t.r}, {"quality", t.quality}, {"tailSamples", t.tailSamples}, {"wideInterval", t.wideInterval}};
}

json run_summary(const SteadyState& ss, const SimConfig& sim, const std::string& label) {
    const auto u = ss.ensemble.mean_velocity();
    return {{"label", label},
            {"alpha", sim.alpha},
            {"initial", sim.initial.to_json()},
            {"converged", ss.converged},
            {"time", ss.time},
            {"temperature", ss.ensemble.temperature()},
            {"meanVelocity", {u.x, u.y, u.z}},
            {"pooledSamples", ss.ensemble.size()},
            {"majorantEvents", ss.majorantEvents.size()},
            {"moments", ss.momentTable.to_json()}};
}

// Strictly positive histogram on |v| <= 3 sqrt(theta0).
CheckResult positivity_check(const SteadyState& ss, const SimConfig& sim) {
    const double rmax = 3.0 * std::sqrt(sim.bath.theta0);
    ParticleEnsemble inside = ss.ensemble;
    std::erase_if(inside.velocities, [rmax](const Vec3& v) { return norm(v) >= rmax; });
    CheckResult c{"positivity", "steady histogram strictly positive on |v| <= 3 sqrt(theta0)", false, {}};
    if (inside.size() == 0) return c;
    const auto d = radial_density(inside, 30, rmax);
    const auto minCount = *std::min_element(d.counts.begin(), d.counts.end());
    c.pass = minCount > 0;
    c.detail = {{"shells", 30}, {"minCount", minCount}};
    return c;
}

CheckResult gaussian_tail_check(const std::string& id, const ParticleEnsemble& ens, double b) {
    const auto tail = tail_order_fit(ens);
    std::vector<double> ps;
    for (int p = 1; p <= 6; ++p) ps.push_back(p);
    const auto z = renormalized_moments(moments(ens, ps), 1.0, b);
    CheckResult c{id, "tail order s = 2 +- 0.3 and z_p <= K^p without super-geometric growth for p <= 6", false, {}};
    const bool sOk = std::abs(tail.s - 2.0) <= 0.3 && !tail.wideInterval;
    const bool zOk = std::isfinite(z.K) && z.growthRatio <= 1.0;
    c.pass = sOk && zOk;
    json zs = json::object();
    for (const auto& [p, v] : z.z) zs[fmt(p)] = v;
    c.detail = {{"alpha", ens.alpha}, {"tail", tail_json(tail)}, {"K", z.K}, {"growthRatio", z.growthRatio}, {"z", zs}};
    return c;
}

// ---- simulate

void scenario_simulate(const ExperimentConfig& cfg, const Output& out, ExperimentReport& rep) {
    SimConfig sim = cfg.sim;
    std::optional<ParticleEnsemble> start;
    if (cfg.resumeFrom) {
        SnapshotHeader h;
        start = read_snapshot(*cfg.resumeFrom, &h);
        const auto diff = snapshot_mismatches(h, sim);
        if (!diff.empty()) {
            std::string msg = "snapshot " + *cfg.resumeFrom + " does not match the config in:";
            for (const auto& d : diff) msg += " " + d;
            throw InputError(msg);
        }
        rep.extra["resumedFrom"] = {{"path", *cfg.resumeFrom}, {"step", h.step}, {"time", h.time}};
    }
    const auto ss = steady_run(sim, out, "run", start ? &*start : nullptr);
    rep.allConverged = ss.converged;
    rep.runs.push_back(run_summary(ss, sim, "run"));
    out.write("moments.csv", convergence_csv(ss.convergenceLog));
    out.write("density.csv", density_csv(radial_density(ss.ensemble, shells_for(cfg))));

    const auto M = elastic_steady_state(sim.bath);
    const double T = ss.ensemble.temperature();
    if (sim.alpha == 1.0) {
        const double rel = std::abs(T - M.theta) / M.theta;
        rep.checks.push_back({"1", "alpha = 1 steady temperature equals Theta# within 2%", rel <= 0.02,
                              {{"temperature", T}, {"thetaSharp", M.theta}, {"relativeError", rel}}});
    }
    rep.checks.push_back(positivity_check(ss, sim));
    if (ss.ensemble.size() >= 10000) rep.checks.push_back(gaussian_tail_check("gaussian-tails", ss.ensemble, cfg.diagnostics.momentB));
    const auto dist = distance_to_maxwellian(ss.ensemble, std::nullopt, shells_for(cfg),
                                             cfg.diagnostics.distanceRadius * std::sqrt(sim.bath.theta0),
                                             cfg.diagnostics.weightA, cfg.diagnostics.weightS);
    rep.extra["distanceToOwnMaxwellian"] = {{"dL1", dist.dL1}, {"dY", dist.dY}};
}

// ---- sweep-alpha

struct SweepPoint {
    double alpha;
    SteadyState ss;
    double dL1, dY, floor;
    PointwiseReport envelope;
    EntropyComparison entropy;
};

void scenario_sweep(const ExperimentConfig& cfg, const Output& out, ExperimentReport& rep) {
    auto alphas = cfg.alphaList;
    std::sort(alphas.begin(), alphas.end());
    const double sq = std::sqrt(cfg.sim.bath.theta0);
    const double rDist = cfg.diagnostics.distanceRadius * sq, rEnv = cfg.diagnostics.envelopeRadius * sq;
    const int shells = shells_for(cfg);
    const auto M = elastic_steady_state(cfg.sim.bath);
    std::vector<SweepPoint> pts;
    for (double a : alphas) {
        SimConfig sim = cfg.sim;
        sim.alpha = a;
        const auto label = label_for(a);
        SweepPoint p{a, steady_run(sim, out, label), 0, 0, 0, {}, {}};
        rep.allConverged = rep.allConverged && p.ss.converged;
        const auto d = distance_to_maxwellian(p.ss.ensemble, M, shells, rDist, cfg.diagnostics.weightA,
                                              cfg.diagnostics.weightS);
        p.dL1 = d.dL1;
        p.dY = d.dY;
        p.floor = noise_floor(p.ss.window, shells, rDist);
        p.envelope = pointwise_bounds_check(p.ss.ensemble, rEnv, cfg.diagnostics.envelopePoints);
        const int eShells = cfg.diagnostics.entropyShells > 0
                                ? cfg.diagnostics.entropyShells
                                : static_cast<int>(std::lround(std::cbrt(double(p.ss.ensemble.size()))));
        const auto prof = profile_from_density(radial_density(p.ss.ensemble, eShells));
        p.entropy = entropy_dissipation_difference(prof, a, cfg.diagnostics.entropySamples, cfg.sim.seed);
        out.write("moments_" + label + ".csv", convergence_csv(p.ss.convergenceLog));
        out.write("density_" + label + ".csv", density_csv(radial_density(p.ss.ensemble, shells)));
        auto summary = run_summary(p.ss, sim, label);
        summary["distanceToM"] = {{"dL1", p.dL1}, {"dY", p.dY}, {"noiseFloor", p.floor}};
        summary["envelope"] = p.envelope.to_json();
        summary["entropy"] = {{"D_alpha", p.entropy.atAlpha.value},
                              {"D_alpha_se", p.entropy.atAlpha.stdError},
                              {"D_1", p.entropy.elastic.value},
                              {"D_1_se", p.entropy.elastic.stdError},
                              {"difference", p.entropy.difference},
                              {"differenceStdError", p.entropy.differenceStdError},
                              {"excludedMass", p.entropy.atAlpha.excludedMass},
                              {"shells", eShells}};
        rep.runs.push_back(summary);
        pts.push_back(std::move(p));
    }

    // elastic-limit convergence
    {
        bool decreasing = true;
        json seq = json::array();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i > 0 && !(pts[i].dL1 < pts[i - 1].dL1)) decreasing = false;
            seq.push_back({{"alpha", pts[i].alpha}, {"dL1", pts[i].dL1}, {"noiseFloor", pts[i].floor}});
        }
        const bool lastOk = pts.back().dL1 < 3.0 * pts.back().floor;
        rep.checks.push_back({"8", "||F_alpha - M||_1 strictly decreasing in alpha, last value below 3x noise floor",
                              decreasing && lastOk,
                              {{"sequence", seq}, {"strictlyDecreasing", decreasing}, {"lastBelowFloor", lastOk},
                               {"shells", shells}, {"radius", rDist}}});
        std::vector<double> x, y;
        for (const auto& p : pts)
            if (p.alpha < 1.0 && p.dL1 > 0.0) x.push_back(std::log(1.0 - p.alpha)), y.push_back(std::log(p.dL1));
        if (x.size() >= 2) {
            const auto f = fit_line(x, y);
            rep.checks.push_back({"rate-exponent",
                                  "fitted rate of ||F_alpha - M||_1 in (1 - alpha) at least half of 1/(4+2 delta)",
                                  f.slope >= 0.125, {{"exponent", f.slope}, {"stdError", f.slopeStdError}}});
        }
    }
    // one envelope for the whole sweep
    {
        std::vector<PointwiseReport> reps;
        for (const auto& p : pts) reps.push_back(p.envelope);
        const auto env = common_envelope(reps);
        bool ok = true;
        json per = json::array();
        for (const auto& p : pts) {
            const auto v = verify_envelope(p.envelope.density, env);
            ok = ok && v.holds() && p.envelope.holds();
            per.push_back({{"alpha", p.alpha}, {"worstLowerZ", v.worstLowerZ}, {"worstUpperZ", v.worstUpperZ},
                           {"checkedPoints", v.checkedPoints}});
        }
        rep.checks.push_back({"11", "a single Maxwellian lower and upper envelope fits every steady state",
                              ok,
                              {{"a0", env.a0}, {"a", env.a}, {"muA", env.muA}, {"rMin", env.rMin},
                               {"rMax", env.rMax}, {"perAlpha", per}}});
    }
    // entropy-dissipation continuity
    {
        std::vector<double> x, y;
        json per = json::array();
        for (const auto& p : pts) {
            per.push_back({{"alpha", p.alpha}, {"difference", p.entropy.difference},
                           {"stdError", p.entropy.differenceStdError}});
            if (p.alpha < 1.0 && p.entropy.difference != 0.0)
                x.push_back(std::log(1.0 - p.alpha)), y.push_back(std::log(std::abs(p.entropy.difference)));
        }
        CheckResult c{"13", "|D_alpha(F_alpha) - D_1(F_alpha)| linear in (1 - alpha): fitted exponent 1.0 +- 0.3",
                      false, {{"perAlpha", per}}};
        if (x.size() >= 2) {
            const auto f = fit_line(x, y);
            c.pass = std::abs(f.slope - 1.0) <= 0.3;
            c.detail["exponent"] = f.slope;
            c.detail["exponentStdError"] = f.slopeStdError;
        }
        rep.checks.push_back(c);
    }
    rep.checks.push_back(gaussian_tail_check("10", pts.front().ss.ensemble, cfg.diagnostics.momentB));
    rep.checks.push_back(positivity_check(pts.front().ss, cfg.sim));
}

// ---- uniqueness

struct SingletonTrial {
    bool pass = true;
    json detail;
};

SingletonTrial singleton_trial(const ExperimentConfig& cfg, double alpha, const Output& out, ExperimentReport& rep) {
    const double rDist = cfg.diagnostics.distanceRadius * std::sqrt(cfg.sim.bath.theta0);
    const int shells = shells_for(cfg);
    std::vector<SteadyState> runs;
    double floorSum = 0.0;
    json floors = json::array();
    for (std::size_t k = 0; k < cfg.initialConditions.size(); ++k) {
        SimConfig sim = cfg.sim;
        sim.alpha = alpha;
        sim.initial = cfg.initialConditions[k];
        const auto label = label_for(alpha) + "_ic_" + std::to_string(k);
        auto ss = steady_run(sim, out, label);
        rep.allConverged = rep.allConverged && ss.converged;
        const double fl = noise_floor(ss.window, shells, rDist);
        floorSum += fl;
        floors.push_back(fl);
        auto summary = run_summary(ss, sim, label);
        summary["noiseFloor"] = fl;
        rep.runs.push_back(summary);
        out.write("moments_" + label + ".csv", convergence_csv(ss.convergenceLog));
        out.write("density_" + label + ".csv", density_csv(radial_density(ss.ensemble, shells)));
        runs.push_back(std::move(ss));
    }
    const double floor = floorSum / double(runs.size());
    SingletonTrial t;
    json pairs = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            const double d = l1_distance(runs[i].ensemble, runs[j].ensemble, shells, rDist);
            t.pass = t.pass && d < 3.0 * floor;
            pairs.push_back({{"i", i}, {"j", j}, {"dL1", d}});
        }
    t.detail = {{"alpha", alpha}, {"pairs", pairs}, {"noiseFloor", floor}, {"floors", floors},
                {"shells", shells}, {"radius", rDist}, {"pass", t.pass}};
    return t;
}

void scenario_uniqueness(const ExperimentConfig& cfg, const Output& out, ExperimentReport& rep) {
    auto alphas = cfg.alphaList;
    std::sort(alphas.begin(), alphas.end());
    json trials = json::array();
    std::optional<double> smallest;
    SingletonTrial top;
    for (double a : alphas) {
        top = singleton_trial(cfg, a, out, rep);
        if (top.pass && !smallest) smallest = a;
        trials.push_back(top.detail);
    }
    rep.checks.push_back({"9", "pairwise steady L1 distances below 3x the self-distance noise floor at the largest alpha",
                          top.pass, top.detail});
    rep.extra["trials"] = trials;
    rep.extra["smallestPassingAlpha"] = smallest ? json(*smallest) : json(nullptr);
}

// ---- spectral

void scenario_spectral(const ExperimentConfig& cfg, const Output& out, ExperimentReport& rep) {
    json spectra = json::array();
    json gapRows = json::array(), l1Rows = json::array(), crossChecks = json::array();
    bool gapOk = true, l1Ok = true, mu2Ok = true, nullOk = true;
    for (double e : cfg.spectral.eList) {
        BathParams bath = cfg.sim.bath;
        bath.e = e;
        bath.u0 = {};
        const auto grid = default_speed_grid(bath, cfg.spectral.gridSize);
        const auto L = discretize_L(grid, bath);
        const auto gL = spectral_gap(L);
        const auto study = refinement_study(OperatorKind::linear_L, bath, cfg.spectral.gridSize);
        const double bound = gap_lower_bound(bath);
        const bool rowOk = gL.gap >= bound && study.relativeChange <= 0.01;
        gapOk = gapOk && rowOk;
        nullOk = nullOk && gL.nullCount == 1;
        gapRows.push_back({{"e", e}, {"gap", gL.gap}, {"bound", bound}, {"gapFine", study.gapFine},
                           {"richardson", study.richardson}, {"relativeChange", study.relativeChange},
                           {"nullCount", gL.nullCount}, {"pass", rowOk}});
        spectra.push_back(spectrum_report(L, gL));

        const auto L1 = discretize_linearized(grid, bath);
        const auto g1 = spectral_gap(L1);
        spectra.push_back(spectrum_report(L1, g1));
        mu2Ok = mu2Ok && g1.gap >= bound;
        nullOk = nullOk && g1.nullCount == 1;

        // random mean-zero f: solve A h = A f and compare
        const CounterRng rng(cfg.sim.seed);
        Eigen::VectorXd psi(L1.size());
        for (int i = 0; i < L1.size(); ++i) psi[i] = rng.normal2(0, Phase::diagnostic, static_cast<std::uint64_t>(i))[0];
        psi -= L1.nullVector.dot(psi) * L1.nullVector;
        const Eigen::VectorXd f = L1.from_rep(psi);
        const Eigen::VectorXd g = L1.from_rep(L1.A * psi);
        double solveResidual = 0.0;
        const Eigen::VectorXd h = solve_mean_zero(L1, g, &solveResidual);
        const double roundTrip = (L1.to_rep(h) - psi).norm() / psi.norm();
        const double hNorm = L1.to_rep(h).norm(), gNorm = (L1.A * psi).norm();
        const bool boundOk = hNorm <= gNorm / g1.gap * (1.0 + 1e-10);
        const bool zeroOk = solve_mean_zero(L1, Eigen::VectorXd::Zero(L1.size())).isZero(0.0);
        const bool ok = L1.calibration.residual <= 1e-5 && solveResidual <= 1e-8 && roundTrip <= 1e-8 && boundOk && zeroOk;
        l1Ok = l1Ok && ok;
        l1Rows.push_back({{"e", e}, {"nullResidual", L1.calibration.residual},
                          {"rawNullResidual", L1.calibration.rawResidual}, {"solveResidual", solveResidual},
                          {"roundTrip", roundTrip}, {"spectralBoundHolds", boundOk}, {"zeroMapsToZero", zeroOk},
                          {"c1", L1.calibration.c1}, {"c1Analytic", L1.calibration.c1Analytic}, {"gap", g1.gap},
                          {"pass", ok}});
        const auto cc = gain_cross_check(L1, {0.3, 1.0, 2.0}, 0.8 * elastic_steady_state(bath).theta);
        crossChecks.push_back({{"e", e}, {"check", cc.to_json()}});
    }
    out.write("spectrum.json", spectra.dump(2));
    rep.runs = spectra;
    rep.checks.push_back({"4", "gap of L at least eta(1+e)/(4 sqrt 5) and stable to 1% under grid doubling", gapOk,
                          {{"rows", gapRows}}});
    rep.checks.push_back({"12", "linearized operator: null residual <= 1e-5, mean-zero solve residual <= 1e-8, round trip",
                          l1Ok, {{"rows", l1Rows}}});
    rep.checks.push_back({"mu2", "gap of the linearized operator at least the same lower bound", mu2Ok, {}});
    rep.checks.push_back({"null-space", "exactly one eigenvalue below gap/100 for every operator", nullOk, {}});
    rep.extra["gainCrossCheck"] = crossChecks;
}

// ---- verify-kernel

void scenario_verify_kernel(const ExperimentConfig& cfg, const Output&, ExperimentReport& rep) {
    const BathParams bath = cfg.sim.bath;
    CalibrationReport calib;
    const auto kp = calibrate_kernel(bath, &calib);
    const auto M = elastic_steady_state(bath);
    const CounterRng rng(cfg.sim.seed);
    const double spread = std::sqrt(2.0 * std::max(bath.theta0, M.theta));
    auto draw = [&](std::uint64_t i, std::uint32_t block) {
        const auto a = rng.normal2(0, Phase::diagnostic, i, 2 * block);
        const auto b = rng.normal2(0, Phase::diagnostic, i, 2 * block + 1);
        return bath.u0 + spread * Vec3{a[0], a[1], b[0]};
    };
    double worstBalance = 0.0, worstSym = 0.0;
    const int pairs = 10000;
    for (int i = 0; i < pairs; ++i) {
        const Vec3 v = draw(i, 0), w = draw(i, 1);
        const double lhs = log_kernel_k(kp, v, w) + std::log(maxwellian_density(M, w));
        const double rhs = log_kernel_k(kp, w, v) + std::log(maxwellian_density(M, v));
        worstBalance = std::max(worstBalance, std::abs(std::expm1(lhs - rhs)));
        const double g1 = kernel_G(kp, v, w), g2 = kernel_G(kp, w, v);
        if (g1 > 0.0 || g2 > 0.0) worstSym = std::max(worstSym, std::abs(g1 - g2) / std::max(g1, g2));
    }
    rep.checks.push_back({"2", "detailed balance k(v,w)M(w) = k(w,v)M(v), max relative defect < 1e-10",
                          worstBalance < 1e-10, {{"pairs", pairs}, {"maxDefect", worstBalance}}});
    rep.checks.push_back({"G-symmetry", "G(v,w) = G(w,v) within 1e-10", worstSym < 1e-10, {{"maxDefect", worstSym}}});

    double worstNorm = 0.0;
    json rows = json::array();
    for (double s : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0}) {
        for (int dir = 0; dir < 3; ++dir) {
            Vec3 w = bath.u0;
            (dir == 0 ? w.x : dir == 1 ? w.y : w.z) += s;
            if (s == 0.0 && dir > 0) continue;
            const auto col = kernel_column_integral(kp, w);
            const double sig = collision_frequency_sigma(bath, w);
            const double rel = std::abs(col.value - sig) / sig;
            worstNorm = std::max(worstNorm, rel);
            rows.push_back({{"speed", s}, {"axis", dir}, {"integral", col.value}, {"sigma", sig}, {"relResidual", rel}});
        }
    }
    rep.checks.push_back({"3", "int k(v,w) dv = sigma(w) within 1e-5 on |w| <= 10", worstNorm <= 1e-5,
                          {{"maxRelResidual", worstNorm}, {"rows", rows}}});

    // H(w) m(w) / (1 + |w|^{1-s}) on |w| in [5, 20]
    const double a = cfg.diagnostics.weightA, s = cfg.diagnostics.weightS;
    bool hOk = true;
    json hRows = json::array();
    for (double e : {0.5, 1.0}) {
        BathParams b = bath;
        b.e = e;
        const auto kpe = calibrate_kernel(b);
        std::vector<double> speeds, ratios;
        for (int i = 0; i < 16; ++i) {
            const double r = 5.0 + 15.0 * i / 15.0;
            const auto H = H_weighted_scaled(kpe, b.u0 + Vec3{0.0, 0.0, r}, a, s);
            speeds.push_back(r);
            ratios.push_back(H.value / (1.0 + std::pow(r, 1.0 - s)));
        }
        const double rho = spearman(speeds, ratios);
        hOk = hOk && rho < 0.5;
        hRows.push_back({{"e", e}, {"spearman", rho}, {"speeds", speeds}, {"ratios", ratios}});
    }
    rep.checks.push_back({"7", "H(w) m(w) / (1 + |w|^{1-s}) shows no growth trend on [5, 20] (Spearman < 0.5)", hOk,
                          {{"a", a}, {"s", s}, {"rows", hRows}}});
    rep.extra["calibration"] = calib.to_json();
    json rowIdentity = json::array();
    for (double sp : {0.0, 1.0, 3.0}) {
        const auto r = kernel_row_integral(kp, bath.u0 + Vec3{0.0, 0.0, sp});
        rowIdentity.push_back({{"speed", sp}, {"integral", std::isfinite(r.value) ? json(r.value) : json("inf")}});
    }
    rep.extra["rowIntegral"] = rowIdentity;
}

// ---- verify-moments

double energy(const ParticleEnsemble& e) {
    double s = 0.0;
    for (const auto& v : e.velocities) s += norm2(v);
    return s * e.weight;
}

void scenario_verify_moments(const ExperimentConfig& cfg, const Output& out, ExperimentReport& rep) {
    const CounterRng rng(cfg.sim.seed);

    // Povzner suite
    {
        const SphericalRule rule(32, 32);
        bool ok = true;
        json rows = json::array();
        for (double alpha : {0.3, 0.7, 0.99}) {
            for (double p : {1.0, 2.0, 3.0}) {
                const auto g = gamma_alpha_p(p, alpha);
                double worst = -1e300;
                for (int i = 0; i < 1000; ++i) {
                    const auto a = rng.normal2(1, Phase::diagnostic, i, 0), b = rng.normal2(1, Phase::diagnostic, i, 1),
                               c = rng.normal2(1, Phase::diagnostic, i, 2);
                    const Vec3 v{a[0], a[1], b[0]}, w = Vec3{b[1], c[0], c[1]} * 2.0;
                    const double lhs = sphere_average_gain(v, w, alpha, PowerMoment{p}, rule);
                    const double rhs = g.gammaAlphaP * std::pow(norm2(v) + norm2(w), p);
                    worst = std::max(worst, (lhs - rhs) / rhs);
                }
                const double margin = std::max(1e-8, g.quadratureError);
                const bool strict = g.gammaAlphaP < std::min(1.0, 4.0 / (p + 1.0)) - margin;
                const bool bounded = worst <= 1e-12;
                ok = ok && strict && bounded;
                rows.push_back({{"alpha", alpha}, {"p", p}, {"gamma", g.gammaAlphaP}, {"gammaP", g.gammaP},
                                {"quadratureError", g.quadratureError}, {"strictlyBelowGammaP", strict}, {"worstRelExcess", worst}, {"bounded", bounded}});
            }
        }
        double elasticDev = 0.0;
        for (double p : {1.0, 2.0, 3.0})
            elasticDev = std::max(elasticDev, std::abs(gamma_alpha_p(p, 1.0).gammaAlphaP - 2.0 / (p + 1.0)));
        ok = ok && elasticDev <= 1e-8;
        rep.checks.push_back({"6",
                              "Povzner: A+ <= gamma_{alpha,p}(|v|^2+|w|^2)^p, gamma_{alpha,p} < min(1, 4/(p+1)) for "
                              "alpha < 1, gamma_{1,p} = 2/(p+1)",
                              ok, {{"rows", rows}, {"elasticDeviation", elasticDev}}});
    }

    // energy dissipation of the quadratic part against the weak form
    {
        SimConfig sim = cfg.sim;
        sim.N = std::min<std::uint64_t>(sim.N, 20000);
        sim.enableBath = false;
        sim.initial = InitialCondition{};
        sim.initial.theta = sim.bath.theta0;
        const auto start = sample_initial(sim);
        double q3 = 0.0;
        for (std::size_t i = 0; i < start.size(); ++i)
            for (std::size_t j = i + 1; j < start.size(); ++j) q3 += std::pow(norm(start.velocities[i] - start.velocities[j]), 3);
        q3 *= 2.0 * start.weight * start.weight;
        const double e0 = energy(start);
        bool ok = true;
        json rows = json::array();
        const int reps = 400;
        for (double alpha : {0.5, 0.9}) {
            sim.alpha = alpha;
            double s1 = 0.0, s2 = 0.0;
            for (int r = 0; r < reps; ++r) {
                ParticleEnsemble e = start;
                e.step = static_cast<std::uint64_t>(r);
                step(e, sim);
                const double d = energy(e) - e0;
                s1 += d;
                s2 += d * d;
            }
            const double mean = s1 / reps;
            const double se = std::sqrt(std::max(0.0, (s2 / reps - mean * mean) / (reps - 1)));
            const double pred = -sim.dt * (1.0 - alpha * alpha) / 8.0 * q3;
            const double z = (mean - pred) / se;
            ok = ok && std::abs(z) <= 3.0;
            rows.push_back({{"alpha", alpha}, {"meanEnergyChange", mean}, {"stdError", se}, {"prediction", pred}, {"z", z}});
        }
        rep.checks.push_back({"5", "per-step energy loss of the quadratic part matches -(1-alpha^2)/8 <|v-w|^3> within 3 sigma",
                              ok, {{"N", sim.N}, {"dt", sim.dt}, {"replicates", reps}, {"rows", rows}}});
    }

    // stationary moment inequality on a steady state
    {
        const auto ss = steady_run(cfg.sim, out, label_for(cfg.sim.alpha));
        rep.allConverged = rep.allConverged && ss.converged;
        rep.runs.push_back(run_summary(ss, cfg.sim, label_for(cfg.sim.alpha)));
        out.write("moments.csv", convergence_csv(ss.convergenceLog));
        out.write("density.csv", density_csv(radial_density(ss.ensemble, shells_for(cfg))));
        bool ok = true;
        json rows = json::array();
        for (double p : {2.0, 3.0}) {
            const auto mi = stationary_moment_inequality(ss.momentTable, cfg.sim.bath, p);
            ok = ok && mi.pass;
            rows.push_back({{"p", p}, {"lhs", mi.lhs}, {"rhs", mi.rhs}, {"slack", mi.slack},
                            {"slackStdError", mi.slackStdError}, {"sharpSlack", mi.sharpSlack},
                            {"sharpSlackStdError", mi.sharpSlackStdError}, {"pass", mi.pass}});
        }
        rep.checks.push_back({"stationary-inequality", "stationary moment inequality holds beyond 3 sigma for p = 2, 3",
                              ok, {{"alpha", cfg.sim.alpha}, {"rows", rows}}});
    }

    // moment propagation from a state with a heavy 8th moment
    {
        SimConfig sim = cfg.sim;
        sim.N = std::min<std::uint64_t>(sim.N, 20000);
        sim.alpha = std::min(sim.alpha, 0.8);
        sim.initial = InitialCondition{};
        sim.initial.kind = InitialCondition::Kind::uniform_ball;
        sim.initial.radius = 4.0 * std::sqrt(sim.bath.theta0);
        sim.tEnd = std::min(sim.tEnd, 20.0);
        const auto traj = moment_trajectory(sim, {0.0, 4.0});
        const std::size_t transient = std::max<std::size_t>(1, traj.size() / 5);
        double early = 0.0, late = 0.0;
        bool massExact = true;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double m4 = traj[i].at(4.0).value;
            (i < transient ? early : late) = std::max(i < transient ? early : late, m4);
            massExact = massExact && traj[i].at(0.0).value == traj.front().at(0.0).value;
        }
        rep.checks.push_back({"moment-propagation", "sup_t m_4(t) bounded by its initial-transient maximum, m_0 exact",
                              late <= early && massExact,
                              {{"earlyMax", early}, {"lateMax", late}, {"massExact", massExact}, {"alpha", sim.alpha}}});
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.scenario = config.scenario;
    rep.config = config.to_json();
    rep.configHash = config.hash();
    rep.provenance = provenance();
    const auto out = prepare_output(config);
    switch (config.scenario) {
        case Scenario::simulate: scenario_simulate(config, out, rep); break;
        case Scenario::sweep_alpha: scenario_sweep(config, out, rep); break;
        case Scenario::uniqueness: scenario_uniqueness(config, out, rep); break;
        case Scenario::spectral: scenario_spectral(config, out, rep); break;
        case Scenario::verify_kernel: scenario_verify_kernel(config, out, rep); break;
        case Scenario::verify_moments: scenario_verify_moments(config, out, rep); break;
    }
    rep.wallClock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.write("report.json", rep.to_json().dump(2));
    return rep;
}

}  // namespace gbath
