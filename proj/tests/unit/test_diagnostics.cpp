#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gbath/diagnostics.hpp"
#include "gbath/error.hpp"

using namespace gbath;

namespace {

ParticleEnsemble maxwellian_sample(std::size_t n, double theta, std::uint64_t seed, double mass = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, std::sqrt(theta));
    ParticleEnsemble e;
    e.weight = mass / double(n);
    e.velocities.resize(n);
    for (auto& v : e.velocities) v = {nd(gen), nd(gen), nd(gen)};
    return e;
}

// E|V|^{2p} for a unit-mass Maxwellian
double maxwellian_moment(double theta, double p) {
    return std::pow(2 * theta, p) * std::tgamma(p + 1.5) / std::tgamma(1.5);
}

// Radial law r^2 exp(-r^s) up to normalization, sampled as r = G^{1/s}, G ~ Gamma(3/s, 1).
ParticleEnsemble stretched_sample(std::size_t n, double s, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> gd(3.0 / s, 1.0);
    std::normal_distribution<double> nd;
    ParticleEnsemble e;
    e.weight = 1.0 / double(n);
    e.velocities.resize(n);
    for (auto& v : e.velocities) {
        Vec3 d{nd(gen), nd(gen), nd(gen)};
        v = d * (std::pow(gd(gen), 1.0 / s) / norm(d));
    }
    return e;
}

}  // namespace

TEST_CASE("moments of a Maxwellian sample agree with the Gamma-function formula") {
    const auto e = maxwellian_sample(200000, 1.3, 5, 2.0);
    const auto t = moments(e, {0.0, 1.0, 2.0, 3.0, 0.5});
    CHECK(t.at(0.0).value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t.at(0.0).stdError == 0.0);
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
        const double exact = 2.0 * maxwellian_moment(1.3, p);
        CHECK(std::abs(t.at(p).value - exact) < 4.0 * t.at(p).stdError);
        CHECK(t.at(p).stdError > 0.0);
    }
    CHECK_THROWS_AS(t.at(7.0), InputError);
    CHECK_THROWS_AS(moments(e, {9.0}), InputError);
}

TEST_CASE("renormalized moments stay geometric for a Maxwellian") {
    const auto e = maxwellian_sample(200000, 1.0, 6);
    const auto z = renormalized_moments(moments(e, {0, 1, 2, 3, 4, 5, 6}), 1.0, 0.5);
    // z_p = m_p / Gamma(p + 1/2)
    for (int p = 1; p <= 4; ++p) {
        const double exact = maxwellian_moment(1.0, p) / std::tgamma(p + 0.5);
        CHECK(z.z.at(p) == doctest::Approx(exact).epsilon(0.05));
    }
    CHECK(z.growthRatio <= 1.0);
    CHECK_THROWS_AS(renormalized_moments(moments(e, {1, 2}), 0.5, 0.5), InputError);
}

TEST_CASE("tail order fit recovers the stretched-exponential exponent") {
    for (double s : {1.0, 2.0}) {
        const auto fit = tail_order_fit(stretched_sample(400000, s, 11 + std::uint64_t(s)));
        CHECK(fit.s == doctest::Approx(s).epsilon(0.15));
        CHECK_FALSE(fit.wideInterval);
    }
    // Maxwellian tails: r^2 exp(-r^2/(2 theta))
    const auto fit = tail_order_fit(maxwellian_sample(400000, 0.7, 13));
    CHECK(fit.s == doctest::Approx(2.0).epsilon(0.15));
    CHECK_THROWS_AS(tail_order_fit(maxwellian_sample(100, 1.0, 1)), InputError);
}

TEST_CASE("radial histogram conserves mass and tracks the Maxwellian profile") {
    const auto e = maxwellian_sample(400000, 1.0, 17, 3.0);
    const auto d = radial_density(e, 60, 6.0);
    CHECK(d.total_mass() == doctest::Approx(3.0).epsilon(1e-4));
    const double c = 3.0 * std::pow(2 * std::numbers::pi, -1.5);
    for (int i = 5; i < 30; ++i) {
        // shell average of the Maxwellian equals the value at the center up to O(h^2)
        const double lo = d.edges[i], hi = d.edges[i + 1];
        const double r = d.center(i);
        const double exact = c * std::exp(-r * r / 2) * (1 + (hi - lo) * (hi - lo) * (r * r - 1) / 24.0);
        CHECK(std::abs(d.values[i] - exact) < 5.0 * d.errors[i]);
    }
    CHECK_THROWS_AS(radial_density(e, 10, 1.0), InputError);
}

TEST_CASE("L1 distances: zero on identical samples, small between independent Maxwellian samples") {
    const auto a = maxwellian_sample(100000, 1.0, 21), b = maxwellian_sample(100000, 1.0, 22);
    CHECK(l1_distance(a, a, 316, 5.0) == 0.0);
    const double dab = l1_distance(a, b, 316, 5.0);
    CHECK(dab == doctest::Approx(l1_distance(b, a, 316, 5.0)).epsilon(1e-15));
    // multinomial self-distance ~ sqrt(2 K / (pi N)) for K shells of comparable mass
    CHECK(dab < 0.1);
    const auto hot = maxwellian_sample(100000, 2.0, 23);
    CHECK(l1_distance(a, hot, 316, 5.0) > 3.0 * dab);

    const auto dm = distance_to_maxwellian(a, std::nullopt, 316, 5.0);
    CHECK(dm.dL1 < 0.1);
    CHECK(dm.maxwellian.theta == doctest::Approx(1.0).epsilon(0.01));
    const auto far = distance_to_maxwellian(hot, MaxwellianParams{1.0, {}, 1.0}, 316, 5.0);
    CHECK(far.dL1 > 0.3);
    CHECK(far.dY > far.dL1);
}

TEST_CASE("noise floor uses the two halves of the window") {
    std::vector<ParticleEnsemble> w;
    for (int k = 0; k < 4; ++k) w.push_back(maxwellian_sample(20000, 1.0, 30 + k));
    const double fl = noise_floor(w, 100, 5.0);
    const auto first = concatenate({w[0], w[1]}), second = concatenate({w[2], w[3]});
    CHECK(fl == l1_distance(first, second, 100, 5.0));
    CHECK_THROWS_AS(noise_floor({w[0]}, 100, 5.0), InputError);
}

TEST_CASE("elastic entropy dissipation of a Maxwellian vanishes; inelastic one is positive") {
    const auto grid = make_speed_grid(80, 9.0);
    std::vector<double> g;
    for (double r : grid.nodes) g.push_back(std::exp(-r * r / 2) * std::pow(2 * std::numbers::pi, -1.5));
    const auto prof = profile_from_grid(grid, g);
    const auto cmp = entropy_dissipation_difference(prof, 0.8, 4000, 3);
    CHECK(std::abs(cmp.elastic.value) < 1e-10);
    CHECK(cmp.atAlpha.value > 0.0);
    CHECK(cmp.difference == doctest::Approx(cmp.atAlpha.value - cmp.elastic.value).epsilon(1e-12));
    const auto again = entropy_dissipation_difference(prof, 0.8, 4000, 3);
    CHECK(again.atAlpha.value == cmp.atAlpha.value);
    CHECK_THROWS_AS(entropy_dissipation(prof, 1.5), InputError);
}

TEST_CASE("profile from a histogram interpolates log-density linearly in r^2") {
    const auto e = maxwellian_sample(400000, 1.0, 41);
    const auto prof = profile_from_density(radial_density(e, 60));
    const double c = std::log(std::pow(2 * std::numbers::pi, -1.5));
    for (double r : {0.5, 1.0, 2.0})
        CHECK(prof.log_value(r) == doctest::Approx(c - r * r / 2).epsilon(0.02));
    CHECK(prof.excludedMass < 1e-3);
}

TEST_CASE("weighted norms flag a slowly decaying tail") {
    const auto grid = make_speed_grid(100, 40.0);
    std::vector<double> gauss, slow;
    for (double r : grid.nodes) {
        gauss.push_back(std::exp(-r * r / 2));
        slow.push_back(std::pow(1 + r, -4.0));
    }
    const auto ng = weighted_norm(grid, gauss, NormSpace::X);
    CHECK_FALSE(ng.divergentTail);
    // int exp(-r^2/2) e^{0.1 sqrt r} 4 pi r^2 dr, by simple quadrature
    double ref = 0.0;
    for (int i = 0; i < 400000; ++i) {
        const double r = (i + 0.5) * 1e-4;
        ref += 1e-4 * 4 * std::numbers::pi * r * r * std::exp(-r * r / 2 + 0.1 * std::sqrt(r));
    }
    CHECK(ng.value == doctest::Approx(ref).epsilon(1e-6));
    CHECK(weighted_norm(grid, gauss, NormSpace::Y).value > ng.value);
    CHECK(weighted_norm(grid, slow, NormSpace::X).divergentTail);
}

TEST_CASE("pointwise envelope brackets a Maxwellian sample") {
    const auto e = maxwellian_sample(200000, 1.0, 51);
    const auto rep = pointwise_bounds_check(e, 4.0, 40);
    CHECK(rep.holds());
    CHECK(rep.envelope.a0 > 0.0);
    CHECK(rep.envelope.a > 0.0);
    // lower envelope decays at least as fast as the density: a0 >= 1/2
    CHECK(rep.envelope.a0 >= 0.5 * 0.95);
    CHECK(rep.envelope.a <= 0.5 * 1.05);
    const auto common = common_envelope({rep, pointwise_bounds_check(maxwellian_sample(200000, 1.2, 52), 4.0, 40)});
    CHECK(common.a0 >= rep.envelope.a0);
    CHECK(common.a <= rep.envelope.a);
    CHECK(verify_envelope(rep.density, common).holds());
}

TEST_CASE("rank correlation and least squares") {
    std::vector<double> x{1, 2, 3, 4, 5}, up{1, 4, 9, 16, 25}, down{5, 3, 2, 1, 0};
    CHECK(spearman(x, up) == doctest::Approx(1.0));
    CHECK(spearman(x, down) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3, 4}, {1, 1, 2, 2}) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 - 2.0 * v);
    const auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(f.slopeStdError == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), InputError);
}

TEST_CASE("stationary moment inequality on a Maxwellian at the bath temperature") {
    BathParams bath;
    bath.theta0 = 1.0;
    bath.e = 0.5;
    const auto t = moments(maxwellian_sample(100000, 0.6, 61), {0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4});
    const auto mi = stationary_moment_inequality(t, bath, 2.0);
    CHECK(mi.slack == doctest::Approx(mi.rhs - mi.lhs));
    CHECK(mi.pass == (mi.slack > 3 * mi.slackStdError && mi.slack > 0));
    CHECK_THROWS_AS(stationary_moment_inequality(t, bath, 0.5), InputError);
}
