#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include <json.hpp>

#include "gbath/background.hpp"
#include "gbath/grid.hpp"

namespace gbath {

enum class RadialKernel { bath, linearized };
enum class OperatorKind { linear_L, linearized_L1 };

std::string to_string(OperatorKind kind);

// T(r_i, r_j): average over the relative angle of the kernel, so that for radial f
//   int kernel(v, w) f(|w|) dw = sum_j weights[j] T(|v|, r_j) f(r_j).
struct RadialKernelTable {
    RadialKernel kernel = RadialKernel::bath;
    Eigen::MatrixXd values;
    double maxRelError = 0.0;
    double constant = 0.0;  // C0 or C1
};

// Kernel k of the bath gain (kernel = bath) or K1 of the elastic linearization with
// constant c1 (kernel = linearized). Requires u0 = 0.
RadialKernelTable reduce_kernel_radial(RadialKernel kernel, const BathParams& bath, const SpeedGrid& grid,
                                       double c1 = 0.0);

// Angular average of C |q|^{-1} exp(-beta(lambda^2 |q|^2 + (r^2 - r'^2)^2 / |q|^2) + shift).
IntegralResult radial_kernel_average(double c, double beta, double lambda, double shift, double r, double rp);

struct SpectralCalibration {
    double rawResidual = 0.0;        // ||A M|| / ||M|| before the diagonal correction
    double residual = 0.0;           // same after it
    double maxDiagonalShift = 0.0;   // largest relative change of a diagonal entry
    double c0 = 0.0;
    double c1 = 0.0;
    double c1Analytic = 0.0;
    double maxEntryError = 0.0;

    nlohmann::json to_json() const;
};

// Symmetric matrix in the representation psi_i = sqrt(W_i / M(r_i)) f(r_i), in which the
// L^2(M^{-1}) inner product is Euclidean.
struct OperatorMatrix {
    OperatorKind kind = OperatorKind::linear_L;
    Eigen::MatrixXd A;
    SpeedGrid grid;
    BathParams bath;
    Eigen::VectorXd maxwellian;  // M(r_i), elastic steady state
    Eigen::VectorXd nullVector;  // unit vector along the image of M
    double nu0 = 0.0;            // bottom of the continuous spectrum of -A
    double asymmetry = 0.0;
    SpectralCalibration calibration;

    int size() const { return static_cast<int>(A.rows()); }
    // grid function f(r_i) <-> representation psi
    Eigen::VectorXd to_rep(const Eigen::VectorXd& f) const;
    Eigen::VectorXd from_rep(const Eigen::VectorXd& psi) const;
};

OperatorMatrix discretize_L(const SpeedGrid& grid, const BathParams& bath);
OperatorMatrix discretize_linearized(const SpeedGrid& grid, const BathParams& bath);

struct SpectralGap {
    Eigen::VectorXd eigenvalues;  // of -A, ascending
    double gap = 0.0;
    int nullCount = 0;            // eigenvalues with |lambda| < gap/100
    int artifactCount = 0;        // eigenvalues above nu0
    double nu0 = 0.0;
};

SpectralGap spectral_gap(const OperatorMatrix& op);

struct RefinementStudy {
    int n = 0;
    double gapCoarse = 0.0;
    double gapFine = 0.0;
    double richardson = 0.0;
    double relativeChange = 0.0;
};

// Gap on n and 2n nodes with a second-order Richardson estimate.
RefinementStudy refinement_study(OperatorKind kind, const BathParams& bath, int n = 200);

// Solves A h = g on the complement of M for a mean-zero grid function g.
Eigen::VectorXd solve_mean_zero(const OperatorMatrix& op, const Eigen::VectorXd& g, double* residual = nullptr);

// eta (1 + e) / (4 sqrt 5) with eta = sqrt(2 theta0) erfinv(1/2)
double gap_lower_bound(const BathParams& bath);

// Compares the K1 gain applied to a Maxwellian of temperature testTheta with a direct
// quadrature of 2 Q1^+(h, M) at the probe speeds.
struct GainCrossCheck {
    std::vector<double> speeds;
    std::vector<double> kernelForm;
    std::vector<double> direct;
    double maxRelDiscrepancy = 0.0;

    nlohmann::json to_json() const;
};

GainCrossCheck gain_cross_check(const OperatorMatrix& linearized, const std::vector<double>& speeds,
                                double testTheta, int radialNodes = 64, int sphereOrder = 16);

nlohmann::json spectrum_report(const OperatorMatrix& op, const SpectralGap& gap, int keep = 20);

}  // namespace gbath
