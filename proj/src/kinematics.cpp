#include "gbath/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gbath/error.hpp"

namespace gbath {

namespace {

void check_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        std::ostringstream os;
        os << who << ": restitution " << alpha << " outside (0,1]";
        throw InputError(os.str());
    }
}

void check_inputs(const Velocity& v, const Velocity& w, const Velocity& sigma, double alpha, const char* who) {
    check_alpha(alpha, who);
    if (!is_finite(v) || !is_finite(w) || !is_finite(sigma))
        throw InputError(std::string(who) + ": non-finite velocity");
    if (std::abs(norm(sigma) - 1.0) > 1e-12) throw InputError(std::string(who) + ": sigma is not a unit vector");
}

}  // namespace

CollisionOutcome post_collision(const Velocity& v, const Velocity& w, const Velocity& sigma, double alpha) {
    check_inputs(v, w, sigma, alpha, "post_collision");
    const Vec3 d = collision_displacement(v, w, sigma, alpha);
    CollisionOutcome out;
    out.vPost = v + d;
    out.wPost = w - d;
    // 2 d.q + 2|d|^2 avoids cancellation between the two energies
    out.energyChange = 2.0 * dot(d, v - w) + 2.0 * norm2(d);
    return out;
}

Velocity bath_post_collision(const Velocity& v, const Velocity& w, const Velocity& sigma, double e) {
    check_inputs(v, w, sigma, e, "bath_post_collision");
    return v + collision_displacement(v, w, sigma, e);
}

double g_alpha(double x, double alpha) {
    check_alpha(alpha, "g_alpha");
    if (!(std::abs(x) <= 1.0)) throw InputError("g_alpha: x outside [-1,1]");
    const double b = 1.0 - alpha;
    const double s = std::sqrt(b * b * x * x + 4.0 * alpha);
    const double t = b * x + s;
    return t * t / ((1.0 + alpha) * s);
}

double h_alpha(double x, double alpha) { return 0.5 * (g_alpha(x, alpha) + g_alpha(-x, alpha)); }

PovznerCoeffs gamma_alpha_p(double p, double alpha) {
    check_alpha(alpha, "gamma_alpha_p");
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("gamma_alpha_p: p must be >= 1");
    auto integrand = [&](double x) { return std::pow(0.5 * (1.0 + x), p) * h_alpha(x, alpha); };

    auto gauss = [&](int n) {
        const auto rule = gauss_legendre(n);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += rule.weights[i] * integrand(rule.nodes[i]);
        return acc;
    };
    PovznerCoeffs out;
    out.alpha = alpha;
    out.p = p;
    out.gammaP = std::min(1.0, 4.0 / (p + 1.0));
    const double g256 = gauss(256);
    const double g512 = gauss(512);
    out.gammaAlphaP = g512;
    out.quadratureError = std::abs(g512 - g256);
    if (out.quadratureError > 1e-10 * std::abs(g512)) {
        const auto r = integrate_adaptive(integrand, -1.0, 1.0, 1e-12);
        out.gammaAlphaP = r.value;
        out.quadratureError = r.error;
        if (r.error > 1e-10 * std::abs(r.value)) {
            std::ostringstream os;
            os << "gamma_alpha_p: relative error " << r.error / std::abs(r.value) << " above 1e-10";
            throw NumericalError(os.str());
        }
    }
    return out;
}

double RadialLogTable::operator()(double r) const {
    const auto n = speeds.size();
    const double r2 = r * r;
    if (n == 1) return logValues[0];
    auto lerp = [&](std::size_t i) {
        const double a2 = speeds[i] * speeds[i], b2 = speeds[i + 1] * speeds[i + 1];
        const double t = (r2 - a2) / (b2 - a2);
        return logValues[i] + t * (logValues[i + 1] - logValues[i]);
    };
    if (r <= speeds.front()) return logValues[0];
    if (r >= speeds.back()) {
        // Gaussian continuation, never increasing
        const double slope = std::min(0.0, (logValues[n - 1] - logValues[n - 2]) /
                                               (speeds[n - 1] * speeds[n - 1] - speeds[n - 2] * speeds[n - 2]));
        return logValues[n - 1] + slope * (r2 - speeds[n - 1] * speeds[n - 1]);
    }
    const auto it = std::upper_bound(speeds.begin(), speeds.end(), r);
    return lerp(static_cast<std::size_t>(it - speeds.begin()) - 1);
}

TestFunction test_function_from_tag(const std::string& tag, double p) {
    if (tag == "power") {
        if (!(p >= 0.0)) throw InputError("power test function needs p >= 0");
        return PowerMoment{p};
    }
    throw InputError("unsupported test-function tag '" + tag + "'");
}

double evaluate(const TestFunction& psi, const Velocity& v) {
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PowerMoment>) {
                return std::pow(norm2(v), f.p);
            } else {
                return f(norm(v));
            }
        },
        psi);
}

namespace {

void validate(const TestFunction& psi) {
    if (const auto* t = std::get_if<RadialLogTable>(&psi)) {
        if (t->speeds.empty() || t->speeds.size() != t->logValues.size())
            throw InputError("sphere_average: empty or inconsistent log-density table");
        if (!std::is_sorted(t->speeds.begin(), t->speeds.end()))
            throw InputError("sphere_average: log-density speeds must increase");
    }
}

double gain_average(const Velocity& v, const Velocity& w, double alpha, const TestFunction& psi,
                    const SphericalRule& rule) {
    const Vec3 q = v - w;
    const double qn = norm(q);
    if (qn == 0.0) return evaluate(psi, v) + evaluate(psi, w);
    const Vec3 axis = q * (1.0 / qn);
    return rule.average(
        [&](const Vec3& s) {
            const Vec3 d = collision_displacement(v, w, s, alpha);
            return evaluate(psi, v + d) + evaluate(psi, w - d);
        },
        axis);
}

}  // namespace

double sphere_average_gain(const Velocity& v, const Velocity& w, double alpha, const TestFunction& psi,
                           const SphericalRule& rule) {
    check_inputs(v, w, Vec3{1.0, 0.0, 0.0}, alpha, "sphere_average");
    validate(psi);
    return gain_average(v, w, alpha, psi, rule);
}

double sphere_average(const Velocity& v, const Velocity& w, double alpha, const TestFunction& psi,
                      const SphericalRule& rule) {
    check_inputs(v, w, Vec3{1.0, 0.0, 0.0}, alpha, "sphere_average");
    validate(psi);
    return gain_average(v, w, alpha, psi, rule) - evaluate(psi, v) - evaluate(psi, w);
}

}  // namespace gbath
