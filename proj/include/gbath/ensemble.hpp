#pragma once

#include <cstdint>
#include <vector>

#include "gbath/vec3.hpp"

namespace gbath {

// N equally weighted velocity samples of f(t, .). The random stream is addressed by
// (seed, step), so those two fields are the full generator state.
struct ParticleEnsemble {
    std::vector<Velocity> velocities;
    double weight = 0.0;
    double time = 0.0;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    double vMax = 0.0;
    double alpha = 1.0;

    std::size_t size() const { return velocities.size(); }
    double mass() const { return weight * static_cast<double>(velocities.size()); }
    Velocity mean_velocity() const;
    // (1/3) <|v - u|^2>
    double temperature() const;
    void validate() const;
};

// Pools several ensembles into one sample with the total mass of the first.
ParticleEnsemble concatenate(const std::vector<ParticleEnsemble>& parts);

}  // namespace gbath
