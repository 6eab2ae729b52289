#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gbath/error.hpp"
#include "gbath/quadrature.hpp"

using namespace gbath;

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 16, 64, 256}) {
        const auto r = gauss_legendre(n, 0.0, 2.0);
        for (int k = 0; k <= 2 * n - 1 && k <= 40; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += r.weights[i] * std::pow(r.nodes[i], k);
            const double exact = std::pow(2.0, k + 1) / (k + 1);
            CHECK(acc == doctest::Approx(exact).epsilon(1e-13));
        }
        for (int i = 1; i < n; ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
}

TEST_CASE("spherical rule averages low-order harmonics exactly") {
    SphericalRule rule(16, 16);
    const Vec3 axis = Vec3{1.0, 2.0, 2.0} * (1.0 / 3.0);
    CHECK(rule.average([](const Vec3&) { return 1.0; }, axis) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rule.average([](const Vec3& s) { return s.x * s.x; }, axis) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(std::abs(rule.average([](const Vec3& s) { return s.y; }, axis)) < 1e-14);
    CHECK(rule.average([](const Vec3& s) { return std::pow(s.z, 4); }, axis) == doctest::Approx(0.2).epsilon(1e-13));
    for (int i = 0; i < rule.size(); ++i) CHECK(norm(rule.direction(i, axis)) == doctest::Approx(1.0));
}

TEST_CASE("adaptive integration reports error and rejects hopeless integrands") {
    const auto r = integrate_adaptive([](double x) { return std::exp(-x * x); }, 0.0, 10.0, 1e-12);
    CHECK(r.value == doctest::Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-13));
    CHECK(r.error < 1e-11);
    CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::sin(1.0 / x) / x; }, 1e-9, 1.0, 1e-12, 0.0, 5),
                    NumericalError);
}
