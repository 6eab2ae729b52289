#include "gbath/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "gbath/error.hpp"
#include "gbath/kinematics.hpp"
#include "gbath/parallel.hpp"
#include "gbath/rng.hpp"

namespace gbath {

namespace {

using nlohmann::json;

Vec3 json_vec(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw InputError(std::string(what) + ": expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw InputError(std::string(what) + ": unknown key '" + it.key() + "'");
}

Vec3 unit_from(double u2, double u3) {
    const double c = 2.0 * u2 - 1.0;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = 2.0 * std::numbers::pi * u3;
    return {s * std::cos(phi), s * std::sin(phi), c};
}

void check_rate(double p, std::uint64_t stepIndex, const char* phase) {
    if (p >= 0.5) {
        std::ostringstream os;
        os << "step " << stepIndex << " (" << phase << "): candidate probability " << p
           << " per step reached 0.5; reduce dt";
        throw NumericalError(os.str());
    }
}

struct ChunkCounts {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    double maxSpeed = 0.0;
};

// Evaluates fn over [0, n) in worker chunks; sums and maxima do not depend on the chunking.
template <class Fn>
ChunkCounts reduce_chunks(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w = n < 2048 ? 1 : static_cast<std::size_t>(std::max(1, workers));
    std::vector<ChunkCounts> parts(w);
    const std::size_t chunk = (n + w - 1) / w;
    parallel_for(w * chunk, static_cast<int>(w), [&](std::size_t b, std::size_t e) {
        const std::size_t c = b / chunk;
        parts[c] = fn(std::min(b, n), std::min(e, n));
    });
    ChunkCounts total;
    for (const auto& p : parts) {
        total.candidates += p.candidates;
        total.accepted += p.accepted;
        total.maxSpeed = std::max(total.maxSpeed, p.maxSpeed);
    }
    return total;
}

void raise_majorant(ParticleEnsemble& ens, double needed, const char* phase, StepStats* stats) {
    const double from = ens.vMax;
    while (ens.vMax < needed) ens.vMax *= 2.0;
    if (stats) stats->majorantEvents.push_back({ens.step, phase, from, ens.vMax});
}

void quadratic_phase(ParticleEnsemble& ens, const SimConfig& cfg, StepStats* stats) {
    const std::size_t n = ens.size();
    const std::size_t pairs = n / 2;
    const CounterRng rng(ens.seed);
    const double rho = ens.mass();

    // random perfect matching by Fisher-Yates, one 32-bit word per index
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::array<std::uint32_t, 4> words{};
    for (std::size_t i = n - 1; i >= 1; --i) {
        if (i == n - 1 || (i & 3u) == 3u) words = rng.raw(ens.step, Phase::pairing, i >> 2);
        const std::uint64_t j = (std::uint64_t{words[i & 3u]} * (i + 1)) >> 32;
        std::swap(perm[i], perm[j]);
    }

    auto& vel = ens.velocities;
    const double fill = static_cast<double>(n - 1) / static_cast<double>(n);
    for (;;) {
        const double pc = rho * ens.vMax * cfg.dt * fill;
        check_rate(pc, ens.step, "collisions");
        const auto scan = reduce_chunks(pairs, cfg.workers, [&](std::size_t lo, std::size_t hi) {
            ChunkCounts c;
            for (std::size_t k = lo; k < hi; ++k) {
                const auto u = rng.uniform4(ens.step, Phase::quadratic, k);
                if (u[0] >= pc) continue;
                c.maxSpeed = std::max(c.maxSpeed, norm(vel[perm[2 * k]] - vel[perm[2 * k + 1]]));
            }
            return c;
        });
        if (scan.maxSpeed <= ens.vMax) break;
        raise_majorant(ens, scan.maxSpeed, "collisions", stats);
    }

    const double pc = rho * ens.vMax * cfg.dt * fill;
    const double vMax = ens.vMax, alpha = cfg.alpha;
    const auto done = reduce_chunks(pairs, cfg.workers, [&](std::size_t lo, std::size_t hi) {
        ChunkCounts c;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto u = rng.uniform4(ens.step, Phase::quadratic, k);
            if (u[0] >= pc) continue;
            ++c.candidates;
            Vec3& v = vel[perm[2 * k]];
            Vec3& w = vel[perm[2 * k + 1]];
            if (u[1] * vMax >= norm(v - w)) continue;
            ++c.accepted;
            const Vec3 d = collision_displacement(v, w, unit_from(u[2], u[3]), alpha);
            v += d;
            w -= d;
        }
        return c;
    });
    if (stats) {
        stats->collisionCandidates += done.candidates;
        stats->collisionsAccepted += done.accepted;
    }
}

void bath_phase(ParticleEnsemble& ens, const SimConfig& cfg, StepStats* stats) {
    const std::size_t n = ens.size();
    const CounterRng rng(ens.seed);
    const double rho = ens.mass();
    const double st = std::sqrt(cfg.bath.theta0);
    const Vec3 u0 = cfg.bath.u0;
    auto partner = [&](std::size_t i) {
        const auto a = rng.normal2(ens.step, Phase::bath_partner, i, 0);
        const auto b = rng.normal2(ens.step, Phase::bath_partner, i, 1);
        return u0 + st * Vec3{a[0], a[1], b[0]};
    };
    auto& vel = ens.velocities;
    for (;;) {
        const double pb = rho * ens.vMax * cfg.dt;
        check_rate(pb, ens.step, "bath");
        const auto scan = reduce_chunks(n, cfg.workers, [&](std::size_t lo, std::size_t hi) {
            ChunkCounts c;
            for (std::size_t i = lo; i < hi; ++i) {
                const auto u = rng.uniform4(ens.step, Phase::bath, i);
                if (u[0] >= pb) continue;
                c.maxSpeed = std::max(c.maxSpeed, norm(vel[i] - partner(i)));
            }
            return c;
        });
        if (scan.maxSpeed <= ens.vMax) break;
        raise_majorant(ens, scan.maxSpeed, "bath", stats);
    }

    const double pb = rho * ens.vMax * cfg.dt;
    const double vMax = ens.vMax, e = cfg.bath.e;
    const auto done = reduce_chunks(n, cfg.workers, [&](std::size_t lo, std::size_t hi) {
        ChunkCounts c;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto u = rng.uniform4(ens.step, Phase::bath, i);
            if (u[0] >= pb) continue;
            ++c.candidates;
            const Vec3 w = partner(i);
            if (u[1] * vMax >= norm(vel[i] - w)) continue;
            ++c.accepted;
            vel[i] += collision_displacement(vel[i], w, unit_from(u[2], u[3]), e);
        }
        return c;
    });
    if (stats) {
        stats->bathCandidates += done.candidates;
        stats->bathAccepted += done.accepted;
    }
}

const std::vector<double> kLogMoments{0.0, 1.0, 2.0, 3.0, 4.0};
const std::vector<double> kSteadyMoments{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};

}  // namespace

std::string InitialCondition::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::maxwellian: os << "maxwellian(theta=" << theta << ")"; break;
        case Kind::bimodal:
            os << "bimodal(theta1=" << theta1 << ",theta2=" << theta2 << ",separation=" << separation << ")";
            break;
        case Kind::uniform_ball: os << "uniform-ball(R=" << radius << ")"; break;
    }
    return os.str();
}

json InitialCondition::to_json() const {
    switch (kind) {
        case Kind::maxwellian: return {{"type", "maxwellian"}, {"theta", theta}, {"u", {u.x, u.y, u.z}}};
        case Kind::bimodal:
            return {{"type", "bimodal"}, {"theta1", theta1}, {"theta2", theta2}, {"separation", separation}};
        case Kind::uniform_ball: return {{"type", "uniform-ball"}, {"R", radius}};
    }
    return {};
}

InitialCondition InitialCondition::from_json(const json& j) {
    if (!j.is_object() || !j.contains("type")) throw InputError("initial condition: missing 'type'");
    InitialCondition ic;
    const auto type = j.at("type").get<std::string>();
    if (type == "maxwellian") {
        reject_unknown(j, {"type", "theta", "u"}, "initial condition");
        ic.kind = Kind::maxwellian;
        ic.theta = j.value("theta", ic.theta);
        if (j.contains("u")) ic.u = json_vec(j.at("u"), "initial condition u");
        if (!(ic.theta > 0.0)) throw InputError("initial condition: theta must be positive");
    } else if (type == "bimodal") {
        reject_unknown(j, {"type", "theta1", "theta2", "separation"}, "initial condition");
        ic.kind = Kind::bimodal;
        ic.theta1 = j.value("theta1", ic.theta1);
        ic.theta2 = j.value("theta2", ic.theta2);
        ic.separation = j.value("separation", ic.separation);
        if (!(ic.theta1 > 0.0 && ic.theta2 > 0.0 && ic.separation >= 0.0))
            throw InputError("initial condition: bimodal parameters must be positive");
    } else if (type == "uniform-ball") {
        reject_unknown(j, {"type", "R"}, "initial condition");
        ic.kind = Kind::uniform_ball;
        ic.radius = j.value("R", ic.radius);
        if (!(ic.radius > 0.0)) throw InputError("initial condition: R must be positive");
    } else {
        throw InputError("initial condition: unknown type '" + type + "'");
    }
    return ic;
}

void SimConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("config: alpha outside (0,1]");
    bath.validate();
    if (N < 2) throw InputError("config: N must be at least 2");
    if (N > (std::uint64_t{1} << 32)) throw InputError("config: N above 2^32");
    if (!(mass > 0.0)) throw InputError("config: mass must be positive");
    if (!(dt > 0.0)) throw InputError("config: dt must be positive");
    if (!(vMaxMajorant >= 0.0)) throw InputError("config: vMaxMajorant must be non-negative");
    if (!(tEnd >= 0.0)) throw InputError("config: tEnd must be non-negative");
    if (!(steadyTolerance >= 0.0)) throw InputError("config: steadyTolerance must be non-negative");
    if (!(snapshotInterval >= dt)) throw InputError("config: snapshotInterval shorter than dt");
    if (windowSnapshots < 2 || windowSnapshots % 2) throw InputError("config: windowSnapshots must be even and >= 2");
    if (averageSnapshots < 1 || averageSnapshots > windowSnapshots)
        throw InputError("config: averageSnapshots must lie in [1, windowSnapshots]");
    if (workers < 1) throw InputError("config: workers must be positive");
}

json SimConfig::to_json() const {
    return {{"alpha", alpha},
            {"bath", {{"theta0", bath.theta0}, {"e", bath.e}, {"u0", {bath.u0.x, bath.u0.y, bath.u0.z}}}},
            {"N", N},
            {"mass", mass},
            {"dt", dt},
            {"vMaxMajorant", vMaxMajorant},
            {"seed", seed},
            {"tEnd", tEnd},
            {"steadyTolerance", steadyTolerance},
            {"snapshotInterval", snapshotInterval},
            {"windowSnapshots", windowSnapshots},
            {"averageSnapshots", averageSnapshots},
            {"enableCollisions", enableCollisions},
            {"enableBath", enableBath},
            {"workers", workers},
            {"initial", initial.to_json()}};
}

SimConfig SimConfig::from_json(const json& j) {
    if (!j.is_object()) throw InputError("sim config must be a JSON object");
    reject_unknown(j,
                   {"alpha", "bath", "N", "mass", "dt", "vMaxMajorant", "seed", "tEnd", "steadyTolerance",
                    "snapshotInterval", "windowSnapshots", "averageSnapshots", "enableCollisions", "enableBath",
                    "workers", "initial"},
                   "sim config");
    SimConfig c;
    try {
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("bath")) {
            const auto& b = j.at("bath");
            reject_unknown(b, {"theta0", "e", "u0"}, "bath");
            c.bath.theta0 = b.value("theta0", c.bath.theta0);
            c.bath.e = b.value("e", c.bath.e);
            if (b.contains("u0")) c.bath.u0 = json_vec(b.at("u0"), "bath u0");
        }
        c.N = j.value("N", c.N);
        c.mass = j.value("mass", c.mass);
        c.dt = j.value("dt", c.dt);
        c.vMaxMajorant = j.value("vMaxMajorant", c.vMaxMajorant);
        c.seed = j.value("seed", c.seed);
        c.tEnd = j.value("tEnd", c.tEnd);
        c.steadyTolerance = j.value("steadyTolerance", c.steadyTolerance);
        c.snapshotInterval = j.value("snapshotInterval", c.snapshotInterval);
        c.windowSnapshots = j.value("windowSnapshots", c.windowSnapshots);
        c.averageSnapshots = j.value("averageSnapshots", c.averageSnapshots);
        c.enableCollisions = j.value("enableCollisions", c.enableCollisions);
        c.enableBath = j.value("enableBath", c.enableBath);
        c.workers = j.value("workers", c.workers);
        if (j.contains("initial")) c.initial = InitialCondition::from_json(j.at("initial"));
    } catch (const json::exception& ex) {
        throw InputError(std::string("sim config: ") + ex.what());
    }
    c.validate();
    return c;
}

void StepStats::merge(const StepStats& o) {
    collisionCandidates += o.collisionCandidates;
    collisionsAccepted += o.collisionsAccepted;
    bathCandidates += o.bathCandidates;
    bathAccepted += o.bathAccepted;
    majorantEvents.insert(majorantEvents.end(), o.majorantEvents.begin(), o.majorantEvents.end());
}

ParticleEnsemble sample_initial(const SimConfig& config) {
    config.validate();
    const CounterRng rng(config.seed);
    const auto& ic = config.initial;
    ParticleEnsemble ens;
    ens.velocities.resize(config.N);
    ens.weight = config.mass / static_cast<double>(config.N);
    ens.seed = config.seed;
    ens.alpha = config.alpha;
    for (std::uint64_t i = 0; i < config.N; ++i) {
        const auto a = rng.normal2(0, Phase::init, i, 0);
        const auto b = rng.normal2(0, Phase::init, i, 1);
        const Vec3 z{a[0], a[1], b[0]};
        Vec3 v;
        switch (ic.kind) {
            case InitialCondition::Kind::maxwellian: v = ic.u + std::sqrt(ic.theta) * z; break;
            case InitialCondition::Kind::bimodal: {
                const bool first = i % 2 == 0;
                const Vec3 centre{(first ? -0.5 : 0.5) * ic.separation, 0.0, 0.0};
                v = centre + std::sqrt(first ? ic.theta1 : ic.theta2) * z;
                break;
            }
            case InitialCondition::Kind::uniform_ball: {
                const auto u = rng.uniform2(0, Phase::init, i, 2);
                v = z * (ic.radius * std::cbrt(u[0]) / norm(z));
                break;
            }
        }
        ens.velocities[i] = v;
    }
    ens.vMax = config.vMaxMajorant > 0.0 ? config.vMaxMajorant
                                         : 12.0 * std::sqrt(std::max(config.bath.theta0, ens.temperature()));
    return ens;
}

void step(ParticleEnsemble& ensemble, const SimConfig& config, StepStats* stats) {
    if (ensemble.size() < 2) throw InputError("step: ensemble needs at least two particles");
    if (config.enableCollisions) quadratic_phase(ensemble, config, stats);
    if (config.enableBath) bath_phase(ensemble, config, stats);
    ++ensemble.step;
    ensemble.time = static_cast<double>(ensemble.step) * config.dt;
}

SteadyState run_to_steady(const SimConfig& config, const ParticleEnsemble* start, const SnapshotSink& sink) {
    config.validate();
    ParticleEnsemble ens = start ? *start : sample_initial(config);
    ens.validate();
    ens.alpha = config.alpha;
    const auto every = static_cast<std::uint64_t>(std::max<long long>(1, std::llround(config.snapshotInterval / config.dt)));
    const auto stepEnd = static_cast<std::uint64_t>(std::llround(config.tEnd / config.dt));
    const std::size_t W = static_cast<std::size_t>(config.windowSnapshots);
    const std::size_t A = static_cast<std::size_t>(config.averageSnapshots);

    SteadyState out;
    std::deque<std::array<double, 5>> window;
    std::deque<ParticleEnsemble> ring;
    StepStats interval;
    while (ens.step < stepEnd) {
        StepStats st;
        step(ens, config, &st);
        interval.merge(st);
        if (ens.step % every != 0) continue;

        const auto table = moments(ens, kLogMoments, 32);
        ConvergenceRecord rec;
        rec.time = ens.time;
        for (int p = 0; p < 5; ++p) rec.m[p] = table.at(p).value;
        rec.collisionAcceptance = interval.collisionCandidates
                                      ? double(interval.collisionsAccepted) / double(interval.collisionCandidates)
                                      : 0.0;
        rec.bathAcceptance =
            interval.bathCandidates ? double(interval.bathAccepted) / double(interval.bathCandidates) : 0.0;
        out.majorantEvents.insert(out.majorantEvents.end(), interval.majorantEvents.begin(),
                                  interval.majorantEvents.end());
        interval = StepStats{};

        window.push_back(rec.m);
        if (window.size() > W) window.pop_front();
        ring.push_back(ens);
        if (ring.size() > A) ring.pop_front();

        bool steady = false;
        if (window.size() == W) {
            auto drift = [&](int p) {
                double first = 0.0, second = 0.0;
                for (std::size_t i = 0; i < W; ++i) (i < W / 2 ? first : second) += window[i][p];
                return std::abs(second - first) / (0.5 * (first + second));
            };
            rec.drift1 = drift(1);
            rec.drift2 = drift(2);
            rec.tolerance1 = config.steadyTolerance > 0.0 ? config.steadyTolerance
                                                          : 3.0 * table.at(1).stdError / table.at(1).value;
            rec.tolerance2 = config.steadyTolerance > 0.0 ? config.steadyTolerance
                                                          : 3.0 * table.at(2).stdError / table.at(2).value;
            steady = rec.drift1 < rec.tolerance1 && rec.drift2 < rec.tolerance2 && ring.size() == A;
        } else {
            rec.drift1 = rec.drift2 = std::nan("");
        }
        out.convergenceLog.push_back(rec);
        if (sink) sink(ens);
        if (steady) {
            out.converged = true;
            break;
        }
    }
    if (ring.empty()) ring.push_back(ens);
    out.window.assign(ring.begin(), ring.end());
    out.ensemble = concatenate(out.window);
    out.live = ens;
    out.time = ens.time;
    out.momentTable = moments(out.ensemble, kSteadyMoments);
    return out;
}

std::vector<MomentTable> moment_trajectory(const SimConfig& config, const std::vector<double>& pList,
                                           const ParticleEnsemble* start) {
    config.validate();
    for (double p : pList)
        if (!(p >= 0.0 && p <= 8.0)) throw InputError("moment_trajectory: p outside [0, 8]");
    ParticleEnsemble ens = start ? *start : sample_initial(config);
    ens.alpha = config.alpha;
    const auto every = static_cast<std::uint64_t>(std::max<long long>(1, std::llround(config.snapshotInterval / config.dt)));
    const auto stepEnd = static_cast<std::uint64_t>(std::llround(config.tEnd / config.dt));
    std::vector<MomentTable> out{moments(ens, pList)};
    while (ens.step < stepEnd) {
        step(ens, config);
        if (ens.step % every == 0) out.push_back(moments(ens, pList));
    }
    return out;
}

std::string convergence_csv(const std::vector<ConvergenceRecord>& log) {
    std::ostringstream os;
    os.precision(12);
    os << "time,m_0,m_1,m_2,m_3,m_4,drift_m1,drift_m2,tol_m1,tol_m2,collision_acceptance,bath_acceptance\n";
    for (const auto& r : log) {
        os << r.time;
        for (double m : r.m) os << ',' << m;
        os << ',' << r.drift1 << ',' << r.drift2 << ',' << r.tolerance1 << ',' << r.tolerance2 << ','
           << r.collisionAcceptance << ',' << r.bathAcceptance << '\n';
    }
    return os.str();
}

}  // namespace gbath
