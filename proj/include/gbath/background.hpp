#pragma once

#include <vector>

#include <json.hpp>

#include "gbath/quadrature.hpp"
#include "gbath/vec3.hpp"

namespace gbath {

struct BathParams {
    Velocity u0{};
    double theta0 = 1.0;
    double e = 1.0;

    void validate() const;
};

struct MaxwellianParams {
    double mass = 1.0;
    Velocity u{};
    double theta = 1.0;

    void validate() const;
};

// Constants of the explicit gain kernel of the bath operator.
struct KernelParams {
    double e = 1.0;
    double theta0 = 1.0;
    Velocity u0{};
    double mu = 0.0;
    double beta0 = 0.125;
    double c0 = 0.0;

    double gamma0() const { return 2.0 * beta0 * (1.0 + mu + mu * mu); }
    double gamma1() const { return 2.0 * beta0 * (3.0 + 3.0 * mu + mu * mu); }
    // 1/(2 Theta#) written in kernel constants
    double a_sharp() const { return 4.0 * (1.0 + mu) * beta0; }
};

struct NormalizationCheck {
    double speed = 0.0;
    double integral = 0.0;
    double sigma = 0.0;
    double relResidual = 0.0;
    bool divergent = false;
};

struct CalibrationReport {
    double c0 = 0.0;
    double c0ClosedForm = 0.0;
    double referenceIntegral = 0.0;  // integral of k(., 0) with unit constant
    std::vector<NormalizationCheck> column;
    std::vector<NormalizationCheck> row;

    nlohmann::json to_json() const;
};

double maxwellian_density(const MaxwellianParams& params, const Velocity& v);

// sigma(v) = int M0(w)|v-w| dw in closed form.
double collision_frequency_sigma(const BathParams& bath, const Velocity& v);
// Same, for a unit-mass Maxwellian of temperature theta at distance `speed` from its center.
double mean_relative_speed(double theta, double speed);

// Kernel constants with c0 fixed by int k(v,0) dv = sigma(0); optional residual report.
KernelParams calibrate_kernel(const BathParams& bath, CalibrationReport* report = nullptr);
// mu and beta0 only; c0 left at zero.
KernelParams kernel_shape(const BathParams& bath);

double kernel_k(const KernelParams& kp, const Velocity& v, const Velocity& w);
// Rewritten form with (2+mu)|q| + 2 qhat.w in the exponent.
double kernel_k_alt(const KernelParams& kp, const Velocity& v, const Velocity& w);
double log_kernel_k(const KernelParams& kp, const Velocity& v, const Velocity& w);
// G(v,w) = M^{-1/2}(v) k(v,w) M^{1/2}(w) with M the elastic steady state.
double kernel_G(const KernelParams& kp, const Velocity& v, const Velocity& w);

// int k(v,w) dv, which mass conservation ties to sigma(w).
IntegralResult kernel_column_integral(const KernelParams& kp, const Velocity& w);
// int k(v,w) dw; +infinity when mu = 0.
IntegralResult kernel_row_integral(const KernelParams& kp, const Velocity& v);

// H(w) = int k(v,w) m^{-1}(v) dv with m(v) = exp(-a|v|^s).
IntegralResult H_weighted(const KernelParams& kp, const Velocity& w, double a, double s);
// H(w) m(w), finite for large |w|.
IntegralResult H_weighted_scaled(const KernelParams& kp, const Velocity& w, double a, double s);

// int |G(v,w)|^p (1+|v|)^{-q} dv
IntegralResult G_power_integral(const KernelParams& kp, const Velocity& w, double p, double q);

MaxwellianParams elastic_steady_state(const BathParams& bath);

// M_p = int M0(w)|w|^{2p} dw
double bath_moment(const BathParams& bath, double p);

}  // namespace gbath
