#include "gbath/spectral.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gbath/error.hpp"
#include "gbath/quadrature.hpp"

namespace gbath {

namespace {

constexpr double kPi = std::numbers::pi;

BathParams bath_frame(BathParams bath) {
    bath.validate();
    bath.u0 = {};
    return bath;
}

// <|v - w|> over the relative angle at fixed |v| = r, |w| = rp
double mean_distance(double r, double rp) {
    const double s = r + rp, d = std::abs(r - rp);
    return (s * s * s - d * d * d) / (6.0 * r * rp);
}

struct KernelShape {
    double c, beta, lambda;
};

KernelShape bath_shape(const BathParams& bath) {
    const auto kp = calibrate_kernel(bath);
    return {kp.c0, kp.beta0, 1.0 + kp.mu};
}

double c1_analytic(double thetaSharp) { return std::sqrt(8.0 * thetaSharp / kPi) / (2.0 * kPi * thetaSharp); }

// symmetric table of angular averages of the G form, sqrt(W_i W_j) G(r_i, r_j)
Eigen::MatrixXd symmetric_gain(const KernelShape& k, const SpeedGrid& grid, double* maxErr) {
    const int n = grid.size();
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const auto g = radial_kernel_average(k.c, k.beta, k.lambda, 0.0, grid.nodes[i], grid.nodes[j]);
            if (g.value > 0.0) *maxErr = std::max(*maxErr, g.error / g.value);
            out(i, j) = out(j, i) = std::sqrt(grid.weights[i] * grid.weights[j]) * g.value;
        }
    }
    return out;
}

struct Frame {
    BathParams bath;
    MaxwellianParams M;
    Eigen::VectorXd mvals, mhat, sigma;
};

Frame make_frame(const SpeedGrid& grid, const BathParams& bathIn) {
    grid.validate();
    Frame f;
    f.bath = bath_frame(bathIn);
    f.M = elastic_steady_state(f.bath);
    const int n = grid.size();
    f.mvals.resize(n);
    f.mhat.resize(n);
    f.sigma.resize(n);
    for (int i = 0; i < n; ++i) {
        const Velocity v{0.0, 0.0, grid.nodes[i]};
        f.mvals[i] = maxwellian_density(f.M, v);
        f.mhat[i] = std::sqrt(grid.weights[i] * f.mvals[i]);
        f.sigma[i] = collision_frequency_sigma(f.bath, v);
    }
    return f;
}

double residual_of(const Eigen::MatrixXd& A, const Eigen::VectorXd& mhat) { return (A * mhat).norm() / mhat.norm(); }

// Singularity subtraction: replace each diagonal entry by the one the discrete gain implies
// for the exact null vector.
double correct_diagonal(Eigen::MatrixXd& A, const Eigen::VectorXd& mhat) {
    const Eigen::VectorXd r = A * mhat;
    double worst = 0.0;
    for (int i = 0; i < A.rows(); ++i) {
        const double d = r[i] / mhat[i];
        worst = std::max(worst, std::abs(d) / std::max(std::abs(A(i, i)), 1e-300));
        A(i, i) -= d;
    }
    return worst;
}

OperatorMatrix finish(OperatorMatrix op, Frame&& f) {
    op.asymmetry = (op.A - op.A.transpose()).cwiseAbs().maxCoeff();
    op.A = 0.5 * (op.A + op.A.transpose());
    op.calibration.residual = residual_of(op.A, f.mhat);
    if (op.calibration.rawResidual > 1e-2)
        throw NumericalError("spectral calibration: raw null residual " + std::to_string(op.calibration.rawResidual) +
                             " points at the kernel constant or the quadrature");
    op.maxwellian = f.mvals;
    op.nullVector = f.mhat.normalized();
    op.bath = f.bath;
    return op;
}

}  // namespace

std::string to_string(OperatorKind kind) { return kind == OperatorKind::linear_L ? "linear-L" : "linearized-L1"; }

IntegralResult radial_kernel_average(double c, double beta, double lambda, double shift, double r, double rp) {
    if (!(r > 0.0 && rp > 0.0)) throw InputError("radial kernel: speeds must be positive");
    const double a = std::abs(r - rp), b = r + rp;
    const double D = (r - rp) * (r + rp);
    const double l2 = lambda * lambda, D2 = D * D;
    auto f = [&](double u) {
        if (u <= 0.0) return D2 == 0.0 ? std::exp(shift) : 0.0;
        return std::exp(-beta * (l2 * u * u + D2 / (u * u)) + shift);
    };
    // split at the maximum of the integrand and one width either side
    const double peak = std::sqrt(std::abs(D) / lambda);
    const double width = 1.0 / std::sqrt(8.0 * beta * l2);
    std::vector<double> cuts{a};
    for (double x : {peak - width, peak, peak + width})
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    IntegralResult total;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const auto part = integrate_adaptive_estimate(f, cuts[k], cuts[k + 1], 1e-12);
        total.value += part.value;
        total.error += part.error;
    }
    if (total.error > 1e-7 * total.value && total.value > 1e-290)
        throw NumericalError("radial kernel: entry tolerance not reached");
    const double scale = c / (2.0 * r * rp);
    return {scale * total.value, scale * total.error};
}

nlohmann::json SpectralCalibration::to_json() const {
    return {{"rawResidual", rawResidual}, {"residual", residual},       {"maxDiagonalShift", maxDiagonalShift},
            {"c0", c0},                   {"c1", c1},                   {"c1Analytic", c1Analytic},
            {"maxEntryError", maxEntryError}};
}

Eigen::VectorXd OperatorMatrix::to_rep(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out(f.size());
    for (int i = 0; i < f.size(); ++i) out[i] = std::sqrt(grid.weights[i] / maxwellian[i]) * f[i];
    return out;
}

Eigen::VectorXd OperatorMatrix::from_rep(const Eigen::VectorXd& psi) const {
    Eigen::VectorXd out(psi.size());
    for (int i = 0; i < psi.size(); ++i) out[i] = std::sqrt(maxwellian[i] / grid.weights[i]) * psi[i];
    return out;
}

RadialKernelTable reduce_kernel_radial(RadialKernel kernel, const BathParams& bath, const SpeedGrid& grid, double c1) {
    bath.validate();
    grid.validate();
    if (bath.u0.x != 0.0 || bath.u0.y != 0.0 || bath.u0.z != 0.0)
        throw InputError("reduce_kernel_radial: requires u0 = 0");
    const double thetaSharp = elastic_steady_state(bath).theta;
    KernelShape k{};
    if (kernel == RadialKernel::bath) {
        k = bath_shape(bath);
    } else {
        if (!(c1 > 0.0)) throw InputError("reduce_kernel_radial: K1 needs a positive constant");
        k = {c1, 1.0 / (8.0 * thetaSharp), 1.0};
    }
    RadialKernelTable t;
    t.kernel = kernel;
    t.constant = k.c;
    const int n = grid.size();
    t.values.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double r = grid.nodes[i], rp = grid.nodes[j];
            // k = M^{1/2}(v) G M^{-1/2}(w)
            const auto g = radial_kernel_average(k.c, k.beta, k.lambda, -(r * r - rp * rp) / (4.0 * thetaSharp), r, rp);
            if (g.value > 0.0) t.maxRelError = std::max(t.maxRelError, g.error / g.value);
            t.values(i, j) = g.value;
        }
    }
    return t;
}

OperatorMatrix discretize_L(const SpeedGrid& grid, const BathParams& bath) {
    auto f = make_frame(grid, bath);
    OperatorMatrix op;
    op.kind = OperatorKind::linear_L;
    op.grid = grid;
    const auto shape = bath_shape(f.bath);
    op.calibration.c0 = shape.c;
    op.A = symmetric_gain(shape, grid, &op.calibration.maxEntryError);
    op.A.diagonal() -= f.sigma;
    op.calibration.rawResidual = residual_of(op.A, f.mhat);
    op.calibration.maxDiagonalShift = correct_diagonal(op.A, f.mhat);
    op.nu0 = collision_frequency_sigma(f.bath, Velocity{});
    return finish(std::move(op), std::move(f));
}

OperatorMatrix discretize_linearized(const SpeedGrid& grid, const BathParams& bath) {
    auto f = make_frame(grid, bath);
    const int n = grid.size();
    const double thetaSharp = f.M.theta;
    OperatorMatrix op;
    op.kind = OperatorKind::linearized_L1;
    op.grid = grid;

    // L part with its own null-vector correction
    const auto shape = bath_shape(f.bath);
    op.calibration.c0 = shape.c;
    Eigen::MatrixXd L = symmetric_gain(shape, grid, &op.calibration.maxEntryError);
    L.diagonal() -= f.sigma;
    const Eigen::VectorXd rawL = L * f.mhat;
    op.calibration.maxDiagonalShift = correct_diagonal(L, f.mhat);

    // elastic part: C1 K1 - sigma1 - M int |v - w| .
    Eigen::MatrixXd K1 = symmetric_gain({1.0, 1.0 / (8.0 * thetaSharp), 1.0}, grid, &op.calibration.maxEntryError);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Q(i, i) -= mean_relative_speed(thetaSharp, grid.nodes[i]);
        for (int j = 0; j < n; ++j) Q(i, j) -= f.mhat[i] * mean_distance(grid.nodes[i], grid.nodes[j]) * f.mhat[j];
    }
    // <M, L1 M> = 0 is linear in C1
    op.calibration.c1 = -f.mhat.dot(Q * f.mhat) / f.mhat.dot(K1 * f.mhat);
    op.calibration.c1Analytic = c1_analytic(thetaSharp);
    Q += op.calibration.c1 * K1;
    op.calibration.rawResidual = (rawL + Q * f.mhat).norm() / f.mhat.norm();
    op.calibration.maxDiagonalShift = std::max(op.calibration.maxDiagonalShift, correct_diagonal(Q, f.mhat));
    op.A = L + Q;
    op.nu0 = collision_frequency_sigma(f.bath, Velocity{}) + mean_relative_speed(thetaSharp, 0.0);
    return finish(std::move(op), std::move(f));
}

SpectralGap spectral_gap(const OperatorMatrix& op) {
    if (op.A.rows() != op.A.cols() || op.A.rows() < 2) throw InputError("spectral_gap: need a square matrix");
    const double scale = std::max(1.0, op.A.cwiseAbs().maxCoeff());
    if ((op.A - op.A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ContractViolation("spectral_gap: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-op.A, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_gap: eigensolver failed");
    SpectralGap out;
    out.eigenvalues = es.eigenvalues();
    out.gap = out.eigenvalues[1];
    out.nu0 = op.nu0;
    for (int i = 0; i < out.eigenvalues.size(); ++i) {
        if (std::abs(out.eigenvalues[i]) < out.gap / 100.0) ++out.nullCount;
        if (out.eigenvalues[i] > op.nu0) ++out.artifactCount;
    }
    return out;
}

RefinementStudy refinement_study(OperatorKind kind, const BathParams& bath, int n) {
    auto gap = [&](int m) {
        const auto grid = default_speed_grid(bath, m);
        return spectral_gap(kind == OperatorKind::linear_L ? discretize_L(grid, bath)
                                                            : discretize_linearized(grid, bath))
            .gap;
    };
    RefinementStudy s;
    s.n = n;
    s.gapCoarse = gap(n);
    s.gapFine = gap(2 * n);
    s.richardson = s.gapFine + (s.gapFine - s.gapCoarse) / 3.0;
    s.relativeChange = std::abs(s.gapFine - s.gapCoarse) / std::abs(s.gapFine);
    return s;
}

Eigen::VectorXd solve_mean_zero(const OperatorMatrix& op, const Eigen::VectorXd& g, double* residual) {
    const int n = op.size();
    if (g.size() != n) throw InputError("solve_mean_zero: size mismatch");
    double mass = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
        mass += op.grid.weights[i] * g[i];
        scale += op.grid.weights[i] * std::abs(g[i]);
    }
    if (std::abs(mass) > 1e-10 * std::max(scale, 1e-300) && std::abs(mass) > 0.0)
        throw InputError("solve_mean_zero: right-hand side does not have zero mass");
    if (scale == 0.0) {
        if (residual) *residual = 0.0;
        return Eigen::VectorXd::Zero(n);
    }
    const Eigen::VectorXd ghat = op.to_rep(g);
    const double c = op.A.diagonal().cwiseAbs().maxCoeff();
    const Eigen::MatrixXd B = -(op.A - c * op.nullVector * op.nullVector.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_mean_zero: operator is not definite off M");
    const Eigen::VectorXd hhat = -llt.solve(ghat);
    if (residual) *residual = (op.A * hhat - ghat).norm() / ghat.norm();
    return op.from_rep(hhat);
}

double gap_lower_bound(const BathParams& bath) {
    bath.validate();
    const double eta = std::sqrt(2.0 * bath.theta0) * boost::math::erf_inv(0.5);
    return eta * (1.0 + bath.e) / (4.0 * std::sqrt(5.0));
}

nlohmann::json GainCrossCheck::to_json() const {
    return {{"speeds", speeds}, {"kernelForm", kernelForm}, {"direct", direct}, {"maxRelDiscrepancy", maxRelDiscrepancy}};
}

GainCrossCheck gain_cross_check(const OperatorMatrix& op, const std::vector<double>& speeds, double testTheta,
                                int radialNodes, int sphereOrder) {
    if (op.kind != OperatorKind::linearized_L1) throw InputError("gain_cross_check: needs the linearized operator");
    if (!(testTheta > 0.0)) throw InputError("gain_cross_check: test temperature must be positive");
    const auto M = elastic_steady_state(op.bath);
    const double thetaSharp = M.theta, c1 = op.calibration.c1;
    const MaxwellianParams hp{1.0, {}, testTheta};
    const double rTop = 10.0 * std::sqrt(std::max(thetaSharp, testTheta));
    const auto radial = gauss_legendre(radialNodes, 0.0, rTop);
    const SphericalRule rule(sphereOrder, sphereOrder);
    const Vec3 zAxis{0.0, 0.0, 1.0};

    GainCrossCheck out;
    for (double r : speeds) {
        if (!(r > 0.0)) throw InputError("gain_cross_check: probe speeds must be positive");
        auto integrand = [&](double rp) {
            if (rp <= 0.0) return 0.0;
            const double t = radial_kernel_average(c1, 1.0 / (8.0 * thetaSharp), 1.0,
                                                   -(r * r - rp * rp) / (4.0 * thetaSharp), r, rp)
                                 .value;
            return 4.0 * kPi * rp * rp * t * maxwellian_density(hp, Velocity{0.0, 0.0, rp});
        };
        const double kform = integrate_adaptive_estimate(integrand, 0.0, r, 1e-9).value +
                             integrate_adaptive_estimate(integrand, r, rTop, 1e-9).value;

        const Vec3 v{0.0, 0.0, r};
        double direct = 0.0;
        for (std::size_t a = 0; a < radial.nodes.size(); ++a) {
            const double rho = radial.nodes[a];
            double shell = 0.0;
            for (int b = 0; b < rule.size(); ++b) {
                const Vec3 w = rule.direction(b, zAxis) * rho;
                const Vec3 q = v - w;
                const double qn = norm(q);
                const Vec3 c = (v + w) * 0.5;
                double avg = 0.0;
                for (int k = 0; k < rule.size(); ++k) {
                    const Vec3 s = rule.direction(k, zAxis) * (0.5 * qn);
                    avg += rule.weight(k) * maxwellian_density(hp, c + s) * maxwellian_density(M, c - s);
                }
                shell += rule.weight(b) * qn * avg;
            }
            direct += radial.weights[a] * 4.0 * kPi * rho * rho * shell;
        }
        direct *= 2.0;
        out.speeds.push_back(r);
        out.kernelForm.push_back(kform);
        out.direct.push_back(direct);
        out.maxRelDiscrepancy = std::max(out.maxRelDiscrepancy, std::abs(kform - direct) / std::abs(direct));
    }
    return out;
}

nlohmann::json spectrum_report(const OperatorMatrix& op, const SpectralGap& gap, int keep) {
    std::vector<double> ev;
    for (int i = 0; i < std::min<int>(keep, static_cast<int>(gap.eigenvalues.size())); ++i) ev.push_back(gap.eigenvalues[i]);
    return {{"kind", to_string(op.kind)},
            {"e", op.bath.e},
            {"theta0", op.bath.theta0},
            {"gridSize", op.size()},
            {"eigenvalues", ev},
            {"gap", gap.gap},
            {"gapLowerBound", gap_lower_bound(op.bath)},
            {"nu0", gap.nu0},
            {"nullCount", gap.nullCount},
            {"artifactCount", gap.artifactCount},
            {"asymmetry", op.asymmetry},
            {"calibrationResiduals", op.calibration.to_json()}};
}

}  // namespace gbath
