#include "gbath/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <queue>
#include <numbers>
#include <sstream>
#include <utility>

#include "gbath/error.hpp"

namespace gbath {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
    require(n >= 1, "gauss_legendre: n must be positive");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    if (n == 1) {
        rule.nodes[0] = mid;
        rule.weights[0] = 2.0 * half;
        return rule;
    }
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = rule.weights[n - 1 - i] = half * w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = mid;
    return rule;
}

SphericalRule::SphericalRule(int nPolar, int nAzimuth) : nPolar_(nPolar), nAzimuth_(nAzimuth) {
    require(nPolar >= 2 && nAzimuth >= 2, "SphericalRule: orders must be at least 2");
    const auto gl = gauss_legendre(nPolar);
    for (int i = 0; i < nPolar; ++i) {
        for (int j = 0; j < nAzimuth; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / nAzimuth;
            cosTheta_.push_back(gl.nodes[i]);
            sinTheta_.push_back(std::sqrt(std::max(0.0, 1.0 - gl.nodes[i] * gl.nodes[i])));
            cosPhi_.push_back(std::cos(phi));
            sinPhi_.push_back(std::sin(phi));
            weights_.push_back(0.5 * gl.weights[i] / nAzimuth);
        }
    }
}

Vec3 SphericalRule::direction(int i, const Vec3& axis) const {
    Vec3 e1, e2;
    orthonormal_frame(axis, e1, e2);
    return cosTheta_[i] * axis + sinTheta_[i] * (cosPhi_[i] * e1 + sinPhi_[i] * e2);
}

double SphericalRule::average(const std::function<double(const Vec3&)>& f, const Vec3& axis) const {
    Vec3 e1, e2;
    orthonormal_frame(axis, e1, e2);
    double acc = 0.0;
    for (int i = 0; i < size(); ++i) {
        const Vec3 s = cosTheta_[i] * axis + sinTheta_[i] * (cosPhi_[i] * e1 + sinPhi_[i] * e2);
        acc += weights_[i] * f(s);
    }
    return acc;
}

namespace {

struct Segment {
    double a, b, value, error, l1;
    int depth;
    bool operator<(const Segment& o) const { return error < o.error; }
};

// 15-point Gauss / 31-point Kronrod pair on [a, b]
Segment gk31(const std::function<double(double)>& f, double a, double b, int depth) {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
    using Gauss = boost::math::quadrature::gauss<double, 15>;
    const auto& x = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& wg = Gauss::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double f0 = f(c);
    double k = f0 * wk[0], g = f0 * wg[0], l1 = std::abs(f0) * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double fp = f(c + h * x[i]), fm = f(c - h * x[i]);
        k += (fp + fm) * wk[i];
        l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
        if (i % 2 == 0) g += (fp + fm) * wg[i / 2];
    }
    const double err = std::max(std::abs(k - g), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(k));
    return {a, b, k * h, err * std::abs(h), l1 * std::abs(h), depth};
}

// Globally adaptive bisection of the worst segment.
Segment adaptive(const std::function<double(double)>& f, double a, double b, double relTol, double absTol,
                 int maxDepth) {
    std::priority_queue<Segment> heap;
    std::vector<Segment> done;
    Segment total = gk31(f, a, b, 0);
    heap.push(total);
    double value = total.value, error = total.error;
    const std::size_t maxSegments = 4096;
    while (!heap.empty() && error > std::max(absTol, relTol * std::abs(value)) &&
           heap.size() + done.size() < maxSegments) {
        const Segment s = heap.top();
        heap.pop();
        if (s.depth >= maxDepth) {
            done.push_back(s);
            continue;
        }
        const double m = 0.5 * (s.a + s.b);
        const Segment l = gk31(f, s.a, m, s.depth + 1), r = gk31(f, m, s.b, s.depth + 1);
        value += l.value + r.value - s.value;
        error += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
    }
    Segment out{a, b, 0.0, 0.0, 0.0, 0};
    auto add = [&](const Segment& s) {
        out.value += s.value;
        out.error += s.error;
        out.l1 += s.l1;
    };
    for (const auto& s : done) add(s);
    for (; !heap.empty(); heap.pop()) add(heap.top());
    if (!std::isfinite(out.value)) throw NumericalError("integrate_adaptive: non-finite integral");
    return out;
}

}  // namespace

IntegralResult integrate_adaptive_estimate(const std::function<double(double)>& f, double a, double b,
                                           double relTol, int maxDepth) {
    const auto s = adaptive(f, a, b, relTol, 0.0, maxDepth);
    return {s.value, s.error};
}

IntegralResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double relTol, double absTol, int maxDepth) {
    const auto s = adaptive(f, a, b, relTol, absTol, maxDepth);
    const double target = std::max(absTol, relTol * s.l1);
    if (s.error > 10.0 * target && s.error > 1e-300) {
        std::ostringstream os;
        os << "integrate_adaptive: tolerance not reached on [" << a << ", " << b
           << "], achieved error " << s.error << " vs requested " << target;
        throw NumericalError(os.str());
    }
    return {s.value, s.error};
}

}  // namespace gbath
