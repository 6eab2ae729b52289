#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gbath/error.hpp"
#include "gbath/kinematics.hpp"
#include "oracles.hpp"

using namespace gbath;

namespace {

Vec3 random_unit(std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    Vec3 s{n(gen), n(gen), n(gen)};
    return s * (1.0 / norm(s));
}

Vec3 random_velocity(std::mt19937_64& gen, double scale = 2.0) {
    std::normal_distribution<double> n(0.0, scale);
    return {n(gen), n(gen), n(gen)};
}

}  // namespace

TEST_CASE("post_collision reference cases") {
    const Vec3 v{1, 0, 0}, w{-1, 0, 0};
    for (double a : {0.2, 0.5, 1.0}) {
        const auto out = post_collision(v, w, Vec3{1, 0, 0}, a);
        CHECK(out.vPost == v);
        CHECK(out.wPost == w);
        CHECK(out.energyChange == 0.0);
    }
    const auto out = post_collision(v, w, Vec3{0, 1, 0}, 0.5);
    CHECK(out.vPost.x == doctest::Approx(0.25));
    CHECK(out.vPost.y == doctest::Approx(0.75));
    CHECK(out.wPost.x == doctest::Approx(-0.25));
    CHECK(out.wPost.y == doctest::Approx(-0.75));
    CHECK(out.energyChange == doctest::Approx(-0.75));
    // closed form -(1-a^2)/4 |q|^2 (1 - sigma.qhat) with |q| = 2, sigma.qhat = 0
    CHECK(-(1 - 0.25) / 4.0 * 4.0 == doctest::Approx(-0.75));
}

TEST_CASE("post_collision rejects bad input") {
    const Vec3 v{1, 0, 0}, w{0, 1, 0};
    CHECK_THROWS_AS(post_collision(v, w, Vec3{1.0 + 1e-9, 0, 0}, 0.5), InputError);
    CHECK_THROWS_AS(post_collision(v, w, Vec3{1, 0, 0}, 0.0), InputError);
    CHECK_THROWS_AS(post_collision(v, w, Vec3{1, 0, 0}, 1.1), InputError);
    CHECK_THROWS_AS(bath_post_collision(v, w, Vec3{0, 0, 2}, 0.5), InputError);
    CHECK_NOTHROW(post_collision(v, w, Vec3{1.0 + 1e-13, 0, 0}, 0.5));
}

TEST_CASE("bath_post_collision reference cases") {
    const Vec3 v{1, 0, 0}, w{-1, 0, 0};
    CHECK(bath_post_collision(v, w, Vec3{1, 0, 0}, 1.0) == v);
    const Vec3 s = bath_post_collision(v, w, Vec3{0, 1, 0}, 0.5);
    CHECK(s.x == doctest::Approx(0.25));
    CHECK(s.y == doctest::Approx(0.75));
    CHECK(s.z == 0.0);
}

TEST_CASE("momentum, dissipativity and the closed-form energy loss over random inputs") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ua(0.01, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const Vec3 v = random_velocity(gen), w = random_velocity(gen), s = random_unit(gen);
        const double a = i % 10 == 0 ? 1.0 : ua(gen);
        const auto out = post_collision(v, w, s, a);
        const Vec3 m0 = v + w, m1 = out.vPost + out.wPost;
        CHECK(norm(m1 - m0) <= 1e-13 * (norm(v) + norm(w)));
        CHECK(out.energyChange <= 1e-14 * (norm2(v) + norm2(w)));
        const Vec3 q = v - w;
        const double closed = -(1.0 - a * a) / 4.0 * norm2(q) * (1.0 - dot(s, q) / norm(q));
        CHECK(std::abs(out.energyChange - closed) <= 1e-12 * std::max(std::abs(closed), 1e-300) + 1e-15 * norm2(q));
        const double direct = norm2(out.vPost) + norm2(out.wPost) - norm2(v) - norm2(w);
        CHECK(std::abs(direct - out.energyChange) <= 1e-12 * (norm2(v) + norm2(w)));
        if (a == 1.0) CHECK(std::abs(out.energyChange) <= 1e-13 * norm2(q));
        // bath partner is dissipative as well
        const Vec3 vs = bath_post_collision(v, w, s, a);
        const Vec3 ws = w - (vs - v);
        CHECK(norm2(vs) + norm2(ws) <= (norm2(v) + norm2(w)) * (1.0 + 1e-13));
    }
}

TEST_CASE("g_alpha values") {
    for (double x : {-0.9, -0.3, 0.0, 0.4, 0.99}) CHECK(g_alpha(x, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g_alpha(0.0, 0.5) == doctest::Approx(2.0 / (1.5 * std::sqrt(2.0))).epsilon(1e-14));
    CHECK(g_alpha(0.0, 0.5) == doctest::Approx(0.94281).epsilon(1e-5));
    for (double x : {0.1, 0.5, 0.8}) CHECK(h_alpha(x, 0.3) == doctest::Approx(h_alpha(-x, 0.3)).epsilon(1e-15));
    CHECK_THROWS_AS(g_alpha(0.0, 0.0), InputError);
    CHECK_THROWS_AS(g_alpha(0.0, -0.5), InputError);
    CHECK_THROWS_AS(g_alpha(1.5, 0.5), InputError);
}

TEST_CASE("gamma_alpha_p against an independent integrator") {
    for (double a : {0.3, 0.5, 0.7, 0.99}) {
        for (double p : {1.0, 1.5, 2.0, 3.0, 4.0, 7.5}) {
            const auto g = gamma_alpha_p(p, a);
            const double ref = oracle::gk(
                [&](double x) {
                    const double b = 1 - a, s = std::sqrt(b * b * x * x + 4 * a);
                    const double gp = (b * x + s) * (b * x + s) / ((1 + a) * s);
                    const double gm = (-b * x + s) * (-b * x + s) / ((1 + a) * s);
                    return std::pow(0.5 * (1 + x), p) * 0.5 * (gp + gm);
                },
                -1.0, 1.0, 1e-14);
            CHECK(g.gammaAlphaP == doctest::Approx(ref).epsilon(1e-10));
            CHECK(g.gammaP == doctest::Approx(std::min(1.0, 4.0 / (p + 1))));
            CHECK(g.gammaAlphaP > 0.0);
            CHECK(g.gammaAlphaP <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("gamma_alpha_p elastic closed form and monotonicity") {
    for (int p = 1; p <= 10; ++p) CHECK(gamma_alpha_p(p, 1.0).gammaAlphaP == doctest::Approx(2.0 / (p + 1)).epsilon(1e-12));
    for (double a : {0.3, 0.7, 0.99, 1.0}) {
        double prev = 2.0;
        for (int p = 1; p <= 10; ++p) {
            const double g = gamma_alpha_p(p, a).gammaAlphaP;
            CHECK(g < prev);
            prev = g;
        }
    }
    const auto g4 = gamma_alpha_p(4.0, 0.5);
    CHECK(g4.gammaAlphaP < g4.gammaP);
    CHECK(g4.gammaP == doctest::Approx(0.8));
    CHECK_THROWS_AS(gamma_alpha_p(0.5, 0.5), InputError);
    CHECK_THROWS_AS(gamma_alpha_p(2.0, 0.0), InputError);
}

TEST_CASE("sphere averages of the energy") {
    std::mt19937_64 gen(11);
    for (int i = 0; i < 200; ++i) {
        const Vec3 v = random_velocity(gen), w = random_velocity(gen);
        CHECK(std::abs(sphere_average(v, w, 1.0, PowerMoment{1.0})) <= 1e-12 * (norm2(v) + norm2(w)));
        for (double a : {0.2, 0.6, 0.95}) {
            const double expect = -(1 - a * a) / 4.0 * norm2(v - w);
            CHECK(sphere_average(v, w, a, PowerMoment{1.0}) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("sphere average converges to a high-order oracle for |v|^4") {
    // oracle: polar integral in the q frame with adaptive quadrature, azimuth by 256-point trapezoid
    const Vec3 v{0.3, -1.2, 0.8}, w{-0.5, 0.4, 1.9};
    const double a = 0.7;
    const Vec3 q = v - w, qh = q * (1.0 / norm(q));
    Vec3 e1, e2;
    orthonormal_frame(qh, e1, e2);
    auto polar = [&](double c) {
        double acc = 0.0;
        const int m = 256;
        for (int j = 0; j < m; ++j) {
            const double phi = 2 * std::numbers::pi * j / m;
            const Vec3 s = c * qh + std::sqrt(1 - c * c) * (std::cos(phi) * e1 + std::sin(phi) * e2);
            const auto o = post_collision(v, w, s * (1.0 / norm(s)), a);
            acc += std::pow(norm2(o.vPost), 2) + std::pow(norm2(o.wPost), 2);
        }
        return acc / m;
    };
    const double ref = 0.5 * oracle::gk(polar, -1.0, 1.0) - std::pow(norm2(v), 2) - std::pow(norm2(w), 2);
    CHECK(sphere_average(v, w, a, PowerMoment{2.0}) == doctest::Approx(ref).epsilon(1e-11));
}

TEST_CASE("Povzner bound over random pairs") {
    std::mt19937_64 gen(5);
    SphericalRule rule;
    for (double a : {0.3, 0.7, 0.99}) {
        for (double p : {1.0, 2.0, 3.0}) {
            const double g = gamma_alpha_p(p, a).gammaAlphaP;
            int violations = 0;
            for (int i = 0; i < 1000; ++i) {
                const Vec3 v = random_velocity(gen), w = random_velocity(gen);
                const double lhs = sphere_average_gain(v, w, a, PowerMoment{p}, rule);
                const double rhs = g * std::pow(norm2(v) + norm2(w), p);
                if (lhs > rhs * (1.0 + 1e-12)) ++violations;
            }
            CHECK(violations == 0);
        }
    }
}

TEST_CASE("log-density test functions") {
    RadialLogTable t{{0.0, 0.5, 1.0, 2.0, 3.0}, {0.0, -0.125, -0.5, -2.0, -4.5}};  // -r^2/2
    for (double r : {0.7, 1.5, 2.5, 4.0}) CHECK(t(r) == doctest::Approx(-0.5 * r * r).epsilon(1e-13));
    // a Maxwellian log-density is a collision invariant for alpha = 1
    const Vec3 v{0.3, 1.0, -0.2}, w{1.1, -0.4, 0.5};
    CHECK(std::abs(sphere_average(v, w, 1.0, t)) < 1e-12);
    CHECK(sphere_average(v, w, 0.5, t) > 0.0);
    CHECK_THROWS_AS(sphere_average(v, w, 0.5, RadialLogTable{}), InputError);
    CHECK_THROWS_AS(test_function_from_tag("sine", 1.0), InputError);
    CHECK(std::holds_alternative<PowerMoment>(test_function_from_tag("power", 2.0)));
}
