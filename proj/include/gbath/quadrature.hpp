#pragma once

#include <functional>
#include <vector>

#include "gbath/vec3.hpp"

namespace gbath {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b]; nodes increasing.
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Product rule on the unit sphere: Gauss-Legendre in cos(theta) times uniform azimuth.
// Weights sum to 1 (normalized measure dsigma / 4pi).
class SphericalRule {
public:
    explicit SphericalRule(int nPolar = 64, int nAzimuth = 64);

    int size() const { return static_cast<int>(weights_.size()); }
    int polar_order() const { return nPolar_; }
    int azimuth_order() const { return nAzimuth_; }

    // Direction i with the polar axis along unit vector axis.
    Vec3 direction(int i, const Vec3& axis) const;
    double weight(int i) const { return weights_[i]; }
    double cos_polar(int i) const { return cosTheta_[i]; }

    // (1/4pi) * integral of f over the sphere, polar axis along axis.
    double average(const std::function<double(const Vec3&)>& f, const Vec3& axis) const;

private:
    int nPolar_;
    int nAzimuth_;
    std::vector<double> cosTheta_, sinTheta_, cosPhi_, sinPhi_, weights_;
};

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;
};

// Adaptive Gauss-Kronrod on [a, b] with its error estimate; never throws on tolerance.
IntegralResult integrate_adaptive_estimate(const std::function<double(double)>& f, double a, double b,
                                           double relTol = 1e-10, int maxDepth = 15);

// Adaptive Gauss-Kronrod on [a, b]; throws NumericalError if the error estimate misses tol.
IntegralResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double relTol = 1e-10, double absTol = 0.0, int maxDepth = 15);

}  // namespace gbath
