#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gbath/background.hpp"
#include "gbath/error.hpp"
#include "gbath/simulator.hpp"
#include "gbath/snapshot.hpp"

using namespace gbath;

namespace {

SimConfig small_config(double alpha = 0.8, std::uint64_t n = 10000) {
    SimConfig c;
    c.alpha = alpha;
    c.bath.theta0 = 1.0;
    c.bath.e = 0.5;
    c.N = n;
    c.seed = 99;
    c.tEnd = 6.0;
    c.windowSnapshots = 4;
    c.averageSnapshots = 2;
    return c;
}

bool bitwise_equal(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    if (a.size() != b.size() || a.step != b.step) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.velocities[i].x != b.velocities[i].x || a.velocities[i].y != b.velocities[i].y ||
            a.velocities[i].z != b.velocities[i].z)
            return false;
    return true;
}

ParticleEnsemble march(ParticleEnsemble e, const SimConfig& c, int steps) {
    for (int k = 0; k < steps; ++k) step(e, c);
    return e;
}

double energy(const ParticleEnsemble& e) {
    double s = 0.0;
    for (const auto& v : e.velocities) s += norm2(v);
    return s * e.weight;
}

}  // namespace

TEST_CASE("trajectories are bitwise identical for any worker count") {
    auto c = small_config();
    const auto start = sample_initial(c);
    const auto one = march(start, c, 20);
    for (int w : {2, 3, 8}) {
        c.workers = w;
        CHECK(bitwise_equal(one, march(start, c, 20)));
    }
}

TEST_CASE("different seeds give different trajectories") {
    auto c = small_config();
    const auto a = march(sample_initial(c), c, 5);
    c.seed = 100;
    const auto b = march(sample_initial(c), c, 5);
    CHECK_FALSE(bitwise_equal(a, b));
}

TEST_CASE("split run through a snapshot equals the unsplit run") {
    const auto c = small_config();
    const auto start = sample_initial(c);
    const auto full = march(start, c, 40);
    const auto half = march(start, c, 20);
    const auto path = std::filesystem::temp_directory_path() / "gbath_split_test.gben";
    write_snapshot(path, half, c);
    SnapshotHeader h;
    const auto resumed = read_snapshot(path, &h);
    CHECK(h.step == 20);
    CHECK(snapshot_mismatches(h, c).empty());
    CHECK(bitwise_equal(full, march(resumed, c, 20)));
    std::filesystem::remove(path);
}

TEST_CASE("steady run resumed from its live state continues deterministically") {
    auto c = small_config(0.9, 4000);
    c.tEnd = 3.0;
    const auto first = run_to_steady(c);
    const auto a = march(first.live, c, 10);
    const auto b = march(first.live, c, 10);
    CHECK(bitwise_equal(a, b));
    CHECK(first.live.time == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("pair collisions conserve momentum; elastic ones conserve energy") {
    for (double alpha : {1.0, 0.6}) {
        auto c = small_config(alpha);
        c.enableBath = false;
        const auto start = sample_initial(c);
        const auto end = march(start, c, 10);
        const auto u0 = start.mean_velocity(), u1 = end.mean_velocity();
        CHECK(norm(u1 - u0) < 1e-13);
        if (alpha == 1.0)
            CHECK(energy(end) == doctest::Approx(energy(start)).epsilon(1e-12));
        else
            CHECK(energy(end) < energy(start));
    }
}

TEST_CASE("bath collisions alone relax the temperature to Theta#") {
    auto c = small_config(1.0, 20000);
    c.enableCollisions = false;
    c.initial.theta = 3.0;
    const double target = elastic_steady_state(c.bath).theta;
    const auto end = march(sample_initial(c), c, 600);
    CHECK(end.temperature() == doctest::Approx(target).epsilon(0.03));
    CHECK(norm(end.mean_velocity()) < 0.05);
}

TEST_CASE("mass is exact and the majorant rate is enforced") {
    auto c = small_config();
    const auto s = sample_initial(c);
    CHECK(s.mass() == doctest::Approx(c.mass).epsilon(1e-15));
    c.dt = 5.0;
    auto e = s;
    CHECK_THROWS_AS(step(e, c), NumericalError);
}

TEST_CASE("config validation rejects bad values and unknown keys") {
    CHECK_THROWS_AS(SimConfig::from_json({{"alpha", 1.5}}), InputError);
    CHECK_THROWS_AS(SimConfig::from_json({{"alpah", 0.5}}), InputError);
    CHECK_THROWS_AS(SimConfig::from_json({{"N", 1}}), InputError);
    const auto c = SimConfig::from_json({{"alpha", 0.7}, {"bath", {{"e", 0.3}}}});
    CHECK(c.alpha == 0.7);
    CHECK(c.bath.e == 0.3);
    const auto back = SimConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
}

TEST_CASE("initial conditions: bimodal and uniform ball") {
    auto c = small_config();
    c.initial.kind = InitialCondition::Kind::uniform_ball;
    c.initial.radius = 2.0;
    const auto ball = sample_initial(c);
    double maxSpeed = 0.0;
    for (const auto& v : ball.velocities) maxSpeed = std::max(maxSpeed, norm(v));
    CHECK(maxSpeed <= 2.0);
    // uniform ball of radius R: temperature R^2 / 5
    CHECK(ball.temperature() == doctest::Approx(0.8).epsilon(0.03));

    c.initial = InitialCondition{};
    c.initial.kind = InitialCondition::Kind::bimodal;
    c.initial.theta1 = c.initial.theta2 = 0.3;
    c.initial.separation = 3.0;
    const auto bi = sample_initial(c);
    // (1/3)(theta * 3 + (sep/2)^2) about the common mean
    CHECK(bi.temperature() == doctest::Approx(0.3 + 2.25 / 3.0).epsilon(0.03));
}
