#include "gbath/snapshot.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gbath/error.hpp"

namespace gbath {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated snapshot: " + path.string());
    return v;
}

SnapshotHeader read_header(std::istream& is, const std::filesystem::path& path) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "GBEN", 4) != 0) throw IoError("not a GBEN snapshot: " + path.string());
    SnapshotHeader h;
    h.version = get<std::uint32_t>(is, path);
    if (h.version != kSnapshotVersion) throw IoError("unsupported snapshot version in " + path.string());
    h.N = get<std::uint64_t>(is, path);
    h.weight = get<double>(is, path);
    h.time = get<double>(is, path);
    h.alpha = get<double>(is, path);
    h.e = get<double>(is, path);
    h.theta0 = get<double>(is, path);
    h.u0.x = get<double>(is, path);
    h.u0.y = get<double>(is, path);
    h.u0.z = get<double>(is, path);
    h.seed = get<std::uint64_t>(is, path);
    h.step = get<std::uint64_t>(is, path);
    h.vMax = get<double>(is, path);
    h.dt = get<double>(is, path);
    return h;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& ensemble, const SimConfig& config) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write snapshot: " + path.string());
        os.write("GBEN", 4);
        put<std::uint32_t>(os, kSnapshotVersion);
        put<std::uint64_t>(os, ensemble.size());
        for (double x : {ensemble.weight, ensemble.time, ensemble.alpha, config.bath.e, config.bath.theta0,
                         config.bath.u0.x, config.bath.u0.y, config.bath.u0.z})
            put(os, x);
        put<std::uint64_t>(os, ensemble.seed);
        put<std::uint64_t>(os, ensemble.step);
        put(os, ensemble.vMax);
        put(os, config.dt);
        static_assert(sizeof(Velocity) == 3 * sizeof(double));
        os.write(reinterpret_cast<const char*>(ensemble.velocities.data()),
                 static_cast<std::streamsize>(ensemble.size() * sizeof(Velocity)));
        if (!os) throw IoError("failed writing snapshot: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open snapshot: " + path.string());
    return read_header(is, path);
}

ParticleEnsemble read_snapshot(const std::filesystem::path& path, SnapshotHeader* header) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open snapshot: " + path.string());
    const auto h = read_header(is, path);
    ParticleEnsemble ens;
    ens.velocities.resize(h.N);
    if (!is.read(reinterpret_cast<char*>(ens.velocities.data()), static_cast<std::streamsize>(h.N * sizeof(Velocity))))
        throw IoError("truncated snapshot: " + path.string());
    if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in snapshot: " + path.string());
    ens.weight = h.weight;
    ens.time = h.time;
    ens.alpha = h.alpha;
    ens.seed = h.seed;
    ens.step = h.step;
    ens.vMax = h.vMax;
    if (header) *header = h;
    return ens;
}

std::vector<std::string> snapshot_mismatches(const SnapshotHeader& h, const SimConfig& c) {
    std::vector<std::string> out;
    if (h.alpha != c.alpha) out.emplace_back("alpha");
    if (h.e != c.bath.e) out.emplace_back("e");
    if (h.theta0 != c.bath.theta0) out.emplace_back("theta0");
    if (h.u0.x != c.bath.u0.x || h.u0.y != c.bath.u0.y || h.u0.z != c.bath.u0.z) out.emplace_back("u0");
    if (h.seed != c.seed) out.emplace_back("seed");
    if (h.dt != c.dt) out.emplace_back("dt");
    if (h.N != c.N) out.emplace_back("N");
    if (std::abs(h.weight * double(h.N) - c.mass) > 1e-12 * c.mass) out.emplace_back("mass");
    return out;
}

}  // namespace gbath
