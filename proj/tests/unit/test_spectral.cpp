#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "gbath/background.hpp"
#include "gbath/error.hpp"
#include "gbath/spectral.hpp"
#include "oracles.hpp"

using namespace gbath;

namespace {

constexpr double kPi = std::numbers::pi;

// int_lo^hi exp(-a u^2 - b/u^2) du through the erf antiderivative
double gauss_inverse_gauss(double a, double b, double lo, double hi) {
    auto F = [&](double u) {
        const double sa = std::sqrt(a), sb = std::sqrt(b), c = 2 * std::sqrt(a * b);
        return std::sqrt(kPi) / (4 * sa) *
               (std::exp(c) * std::erf(sa * u + sb / u) + std::exp(-c) * std::erf(sa * u - sb / u));
    };
    return F(hi) - F(lo);
}

// int M_theta(v) |v - w| dv, by shells
double sigma_oracle(double theta, double speed) {
    auto shell = [&](double rho) {
        auto ang = [&](double c) { return std::exp(-(speed * speed + rho * rho + 2 * speed * rho * c) / (2 * theta)); };
        return 2 * kPi * rho * rho * rho * oracle::gk(ang, -1.0, 1.0, 1e-12);
    };
    return std::pow(2 * kPi * theta, -1.5) * oracle::gk(shell, 0.0, speed + 16 * std::sqrt(theta), 1e-11);
}

BathParams bath_e(double e) {
    BathParams b;
    b.theta0 = 1.0;
    b.e = e;
    return b;
}

}  // namespace

TEST_CASE("angular kernel average matches the erf closed form") {
    for (double lambda : {1.0, 1.5})
        for (auto [r, rp] : {std::pair{0.4, 1.1}, std::pair{1.0, 1.0}, std::pair{2.5, 0.7}, std::pair{3.0, 2.0}}) {
            const double beta = 0.3, c = 0.7, shift = 0.25;
            const double D = r * r - rp * rp;
            const double lo = std::abs(r - rp), hi = r + rp;
            double exact;
            if (D == 0.0) {
                // erf form degenerates: int exp(-a u^2) du
                const double a = beta * lambda * lambda;
                exact = std::sqrt(kPi / a) / 2 * (std::erf(std::sqrt(a) * hi) - std::erf(std::sqrt(a) * lo));
            } else {
                exact = gauss_inverse_gauss(beta * lambda * lambda, beta * D * D, lo, hi);
            }
            exact *= c * std::exp(shift) / (2 * r * rp);
            const auto got = radial_kernel_average(c, beta, lambda, shift, r, rp);
            CHECK(got.value == doctest::Approx(exact).epsilon(1e-10));
        }
}

TEST_CASE("radial bath kernel: detailed balance and column sums equal sigma") {
    const auto bath = bath_e(0.5);
    const auto grid = default_speed_grid(bath, 200);
    const auto t = reduce_kernel_radial(RadialKernel::bath, bath, grid);
    const double th = elastic_steady_state(bath).theta;
    auto M = [&](double r) { return std::exp(-r * r / (2 * th)); };
    double worst = 0.0;
    for (int i = 0; i < grid.size(); i += 7)
        for (int j = 0; j < grid.size(); j += 5) {
            const double lhs = t.values(i, j) * M(grid.nodes[j]), rhs = t.values(j, i) * M(grid.nodes[i]);
            if (lhs > 1e-250) worst = std::max(worst, std::abs(lhs - rhs) / lhs);
        }
    CHECK(worst < 1e-10);
    // the angular average has a kink at r = r', so Gauss-Legendre sums converge as h^2
    auto column_error = [&](int n, double r) {
        const auto g = default_speed_grid(bath, n);
        const auto tab = reduce_kernel_radial(RadialKernel::bath, bath, g);
        int j = 0;
        while (g.nodes[j] < r) ++j;
        double col = 0.0;
        for (int i = 0; i < g.size(); ++i) col += g.weights[i] * tab.values(i, j);
        const double ref = sigma_oracle(bath.theta0, g.nodes[j]);
        return std::abs(col - ref) / ref;
    };
    for (double r : {0.5, 1.5, 3.0}) {
        const double e100 = column_error(100, r), e200 = column_error(200, r);
        CHECK(e200 < 2e-3);
        CHECK(e200 < e100 / 3.0);
    }
    BathParams moving = bath;
    moving.u0 = {0.1, 0, 0};
    CHECK_THROWS_AS(reduce_kernel_radial(RadialKernel::bath, moving, grid), InputError);
}

TEST_CASE("discretized L is symmetric, negative semidefinite, with M in its kernel") {
    const auto bath = bath_e(0.8);
    const auto op = discretize_L(default_speed_grid(bath, 120), bath);
    CHECK(op.asymmetry == 0.0);
    CHECK((op.A - op.A.transpose()).norm() == 0.0);
    CHECK(op.calibration.residual < 1e-12);
    CHECK(op.calibration.rawResidual < 1e-2);
    CHECK((op.A * op.nullVector).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-op.A);
    CHECK(es.eigenvalues()[0] > -1e-10);
    const auto g = spectral_gap(op);
    CHECK(g.nullCount == 1);
    CHECK(g.gap == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-12));
    CHECK(g.gap >= gap_lower_bound(bath));
    CHECK(g.gap < op.nu0);
    // nu0 = sigma(0) = mean speed of the bath Maxwellian
    CHECK(op.nu0 == doctest::Approx(std::sqrt(8.0 / kPi)).epsilon(1e-12));
}

TEST_CASE("gap converges under grid refinement") {
    const auto bath = bath_e(0.5);
    const auto a = spectral_gap(discretize_L(default_speed_grid(bath, 100), bath)).gap;
    const auto b = spectral_gap(discretize_L(default_speed_grid(bath, 200), bath)).gap;
    CHECK(std::abs(a - b) / b < 1e-4);
    const auto s = refinement_study(OperatorKind::linear_L, bath, 100);
    CHECK(s.gapCoarse == doctest::Approx(a).epsilon(1e-14));
    CHECK(s.gapFine == doctest::Approx(b).epsilon(1e-14));
}

TEST_CASE("lower bound formula") {
    // erfinv(1/2) = 0.4769362762044699
    const double eta = std::sqrt(2.0) * 0.4769362762044699;
    CHECK(gap_lower_bound(bath_e(1.0)) == doctest::Approx(eta * 2 / (4 * std::sqrt(5.0))).epsilon(1e-14));
    CHECK(gap_lower_bound(bath_e(0.3)) == doctest::Approx(eta * 1.3 / (4 * std::sqrt(5.0))).epsilon(1e-14));
}

TEST_CASE("linearized operator: calibration, null space and mean-zero solve") {
    const auto bath = bath_e(0.5);
    const auto op = discretize_linearized(default_speed_grid(bath, 120), bath);
    CHECK(op.calibration.c1 == doctest::Approx(op.calibration.c1Analytic).epsilon(2e-3));
    // C1 = sqrt(8 Theta#/pi) / (2 pi Theta#)
    const double th = elastic_steady_state(bath).theta;
    CHECK(op.calibration.c1Analytic == doctest::Approx(std::sqrt(8 * th / kPi) / (2 * kPi * th)).epsilon(1e-12));
    CHECK(op.calibration.residual < 1e-12);
    const auto g = spectral_gap(op);
    CHECK(g.nullCount == 1);

    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    Eigen::VectorXd psi(op.size());
    for (int i = 0; i < op.size(); ++i) psi[i] = nd(gen);
    psi -= op.nullVector.dot(psi) * op.nullVector;
    const Eigen::VectorXd rhs = op.from_rep(op.A * psi);
    double res = 1.0;
    const Eigen::VectorXd h = solve_mean_zero(op, rhs, &res);
    CHECK(res < 1e-10);
    CHECK((op.to_rep(h) - psi).norm() < 1e-9 * psi.norm());
    CHECK(std::abs(op.nullVector.dot(op.to_rep(h))) < 1e-10);
    CHECK_THROWS_AS(solve_mean_zero(op, op.maxwellian), InputError);
}

TEST_CASE("K1 kernel gain agrees with the direct collision integral") {
    const auto bath = bath_e(0.5);
    const auto op = discretize_linearized(default_speed_grid(bath, 120), bath);
    const auto cc = gain_cross_check(op, {0.5, 1.5}, 0.8 * elastic_steady_state(bath).theta);
    CHECK(cc.maxRelDiscrepancy < 2e-3);
}

TEST_CASE("asymmetric matrices are refused") {
    const auto bath = bath_e(0.5);
    auto op = discretize_L(default_speed_grid(bath, 80), bath);
    op.A(0, 1) += 1.0;
    CHECK_THROWS_AS(spectral_gap(op), ContractViolation);
}
