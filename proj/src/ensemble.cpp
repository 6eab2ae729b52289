#include "gbath/ensemble.hpp"

#include "gbath/error.hpp"

namespace gbath {

Velocity ParticleEnsemble::mean_velocity() const {
    Vec3 s;
    for (const auto& v : velocities) s += v;
    return s * (1.0 / static_cast<double>(velocities.size()));
}

double ParticleEnsemble::temperature() const {
    const Vec3 u = mean_velocity();
    double acc = 0.0;
    for (const auto& v : velocities) acc += norm2(v - u);
    return acc / (3.0 * static_cast<double>(velocities.size()));
}

void ParticleEnsemble::validate() const {
    if (velocities.size() < 2) throw InputError("ensemble: need at least two particles");
    if (!(weight > 0.0)) throw InputError("ensemble: weight must be positive");
    for (const auto& v : velocities)
        if (!is_finite(v)) throw InputError("ensemble: non-finite velocity");
}

ParticleEnsemble concatenate(const std::vector<ParticleEnsemble>& parts) {
    if (parts.empty()) throw InputError("concatenate: nothing to pool");
    ParticleEnsemble out = parts.back();
    out.velocities.clear();
    for (const auto& p : parts) out.velocities.insert(out.velocities.end(), p.velocities.begin(), p.velocities.end());
    out.weight = parts.front().mass() / static_cast<double>(out.velocities.size());
    return out;
}

}  // namespace gbath
