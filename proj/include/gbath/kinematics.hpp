#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "gbath/quadrature.hpp"
#include "gbath/vec3.hpp"

namespace gbath {

struct CollisionOutcome {
    Velocity vPost;
    Velocity wPost;
    double energyChange = 0.0;
};

struct PovznerCoeffs {
    double alpha = 1.0;
    double p = 1.0;
    double gammaAlphaP = 0.0;
    double gammaP = 0.0;
    double quadratureError = 0.0;
};

// Inelastic binary collision with restitution alpha and scattering direction sigma.
CollisionOutcome post_collision(const Velocity& v, const Velocity& w, const Velocity& sigma, double alpha);

// Post-collision velocity of the gas particle against a bath partner w (restitution e).
Velocity bath_post_collision(const Velocity& v, const Velocity& w, const Velocity& sigma, double e);

// Unchecked kernel of the two transforms above: returns the displacement added to v.
inline Vec3 collision_displacement(const Velocity& v, const Velocity& w, const Velocity& sigma, double alpha) {
    const Vec3 q = v - w;
    return (0.25 * (1.0 + alpha)) * (norm(q) * sigma - q);
}

double g_alpha(double x, double alpha);
double h_alpha(double x, double alpha);

PovznerCoeffs gamma_alpha_p(double p, double alpha);

// Test functions accepted by sphere_average.
struct PowerMoment {
    double p = 1.0;  // psi(v) = |v|^{2p}
};

// psi(v) = log g(|v|) with g tabulated on increasing speeds; log g interpolated linearly in |v|^2,
// Gaussian extrapolation beyond the last node.
struct RadialLogTable {
    std::vector<double> speeds;
    std::vector<double> logValues;
    double operator()(double r) const;
};

using TestFunction = std::variant<PowerMoment, RadialLogTable>;

// Parses "power:<p>" style tags; unknown tags are rejected.
TestFunction test_function_from_tag(const std::string& tag, double p);

double evaluate(const TestFunction& psi, const Velocity& v);

// A_alpha[psi](v,w) = (1/4pi) int (psi(v')+psi(w')-psi(v)-psi(w)) dsigma.
double sphere_average(const Velocity& v, const Velocity& w, double alpha, const TestFunction& psi,
                      const SphericalRule& rule = SphericalRule());

// Gain part A+_alpha[psi](v,w) = (1/4pi) int (psi(v')+psi(w')) dsigma.
double sphere_average_gain(const Velocity& v, const Velocity& w, double alpha, const TestFunction& psi,
                           const SphericalRule& rule = SphericalRule());

}  // namespace gbath
