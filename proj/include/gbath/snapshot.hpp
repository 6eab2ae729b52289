#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbath/ensemble.hpp"
#include "gbath/simulator.hpp"

namespace gbath {

// Binary GBEN snapshot, little-endian:
//   "GBEN" | u32 version | u64 N | f64 weight, time, alpha, e, theta0, u0x, u0y, u0z |
//   u64 seed, step | f64 vMax, dt | N x 3 f64 velocities
struct SnapshotHeader {
    std::uint32_t version = 1;
    std::uint64_t N = 0;
    double weight = 0.0;
    double time = 0.0;
    double alpha = 1.0;
    double e = 1.0;
    double theta0 = 1.0;
    Velocity u0{};
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    double vMax = 0.0;
    double dt = 0.0;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& ensemble, const SimConfig& config);
ParticleEnsemble read_snapshot(const std::filesystem::path& path, SnapshotHeader* header = nullptr);
SnapshotHeader read_snapshot_header(const std::filesystem::path& path);

// Fields where a snapshot disagrees with the configuration it would be resumed under.
std::vector<std::string> snapshot_mismatches(const SnapshotHeader& header, const SimConfig& config);

}  // namespace gbath
