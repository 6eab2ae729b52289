#include "gbath/background.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gbath/error.hpp"

namespace gbath {

namespace {

constexpr double kPi = std::numbers::pi;

// Local frame of a kernel evaluation: |w| and the bath-frame pair.
struct Pair {
    Vec3 v, w, q;
    double qn;
};

Pair bath_frame(const KernelParams& kp, const Velocity& v, const Velocity& w) {
    if (!is_finite(v) || !is_finite(w)) throw InputError("kernel: non-finite velocity");
    Pair p{v - kp.u0, w - kp.u0, v - w, 0.0};
    p.qn = norm(p.q);
    if (p.qn == 0.0) throw InputError("kernel: singular at v = w");
    return p;
}

// int_{-1}^{1} exp(-beta (c rho + 2 wn y)^2) dy
double shell_inner(double beta, double c, double rho, double wn) {
    const double sb = std::sqrt(beta);
    if (wn < 1e-10) return 2.0 * std::exp(-beta * c * c * rho * rho);
    const double hi = sb * (c * rho + 2.0 * wn), lo = sb * (c * rho - 2.0 * wn);
    const double diff = lo > 0.0 ? std::erfc(lo) - std::erfc(hi) : std::erf(hi) - std::erf(lo);
    return std::sqrt(kPi) / (2.0 * sb) * diff / (2.0 * wn);
}

// 2 pi int_0^inf rho * inner(rho) drho, split at the ridge of the shell integrand.
IntegralResult shell_integral(double beta, double c, double wn, double scale) {
    const double rhoStar = 2.0 * wn / c;
    const double rhoMax = (2.0 * wn + 14.0 / std::sqrt(beta)) / c;
    auto f = [&](double rho) { return rho * shell_inner(beta, c, rho, wn); };
    IntegralResult out;
    if (rhoStar > 0.0) {
        const auto a = integrate_adaptive(f, 0.0, rhoStar, 1e-12);
        out.value += a.value;
        out.error += a.error;
    }
    const auto b = integrate_adaptive(f, rhoStar, rhoMax, 1e-12);
    out.value += b.value;
    out.error += b.error;
    out.value *= 2.0 * kPi * scale;
    out.error *= 2.0 * kPi * scale;
    return out;
}

// 2 pi int_0^rhoMax int_{-1}^1 exp(logf(rho, y)) dy drho with splits at the ridge y0(rho).
template <class LogF, class Ridge>
IntegralResult nested_shell(LogF logf, Ridge ridge, double rhoSplit, double rhoMax, double relTol) {
    double innerErr = 0.0;
    boost::math::quadrature::tanh_sinh<double> tanhSinh;
    auto inner = [&](double rho) {
        auto g = [&](double y) { return std::exp(logf(rho, y)); };
        const double y0 = ridge(rho);
        // tanh-sinh copes with the endpoint cusps where v passes through the origin
        auto piece = [&](double lo, double hi) {
            IntegralResult p;
            p.value = tanhSinh.integrate(g, lo, hi, relTol, &p.error);
            return p;
        };
        IntegralResult r;
        if (y0 > -1.0 && y0 < 1.0) {
            const auto a = piece(-1.0, y0);
            const auto b = piece(y0, 1.0);
            r.value = a.value + b.value;
            r.error = a.error + b.error;
        } else {
            r = piece(-1.0, 1.0);
        }
        innerErr = std::max(innerErr, r.value > 0.0 ? r.error / r.value : 0.0);
        return r.value;
    };
    IntegralResult out;
    if (rhoSplit > 0.0 && rhoSplit < rhoMax) {
        const auto a = integrate_adaptive_estimate(inner, 0.0, rhoSplit, relTol);
        const auto b = integrate_adaptive_estimate(inner, rhoSplit, rhoMax, relTol);
        out.value = a.value + b.value;
        out.error = a.error + b.error;
    } else {
        out = integrate_adaptive_estimate(inner, 0.0, rhoMax, relTol);
    }
    out.error += innerErr * out.value;
    if (!(out.error <= 1e-6 * out.value)) {
        std::ostringstream os;
        os << "nested shell quadrature did not converge: relative error " << out.error / out.value;
        throw NumericalError(os.str());
    }
    out.value *= 2.0 * kPi;
    out.error *= 2.0 * kPi;
    return out;
}

}  // namespace

void BathParams::validate() const {
    if (!(theta0 > 0.0) || !std::isfinite(theta0)) throw InputError("bath: theta0 must be positive");
    if (!(e > 0.0 && e <= 1.0)) throw InputError("bath: restitution e outside (0,1]");
    if (!is_finite(u0)) throw InputError("bath: non-finite u0");
}

void MaxwellianParams::validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InputError("maxwellian: mass must be positive");
    if (!(theta > 0.0) || !std::isfinite(theta)) throw InputError("maxwellian: theta must be positive");
    if (!is_finite(u)) throw InputError("maxwellian: non-finite bulk velocity");
}

nlohmann::json CalibrationReport::to_json() const {
    auto rows = [](const std::vector<NormalizationCheck>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& c : v) {
            a.push_back({{"speed", c.speed},
                         {"integral", c.divergent ? nlohmann::json("divergent") : nlohmann::json(c.integral)},
                         {"sigma", c.sigma},
                         {"relResidual", c.divergent ? nlohmann::json(nullptr) : nlohmann::json(c.relResidual)}});
        }
        return a;
    };
    return {{"c0", c0},
            {"c0ClosedForm", c0ClosedForm},
            {"referenceIntegral", referenceIntegral},
            {"columnIdentity", rows(column)},
            {"rowIdentity", rows(row)}};
}

double maxwellian_density(const MaxwellianParams& params, const Velocity& v) {
    params.validate();
    const double th = params.theta;
    return params.mass * std::pow(2.0 * kPi * th, -1.5) * std::exp(-norm2(v - params.u) / (2.0 * th));
}

double mean_relative_speed(double theta, double speed) {
    const double st = std::sqrt(theta);
    const double x = speed / st;
    if (x < 1e-3) {
        const double x2 = x * x;
        return std::sqrt(8.0 * theta / kPi) * (1.0 + x2 / 6.0 - x2 * x2 / 120.0);
    }
    return st * ((x + 1.0 / x) * std::erf(x / std::numbers::sqrt2) +
                 std::sqrt(2.0 / kPi) * std::exp(-0.5 * x * x));
}

double collision_frequency_sigma(const BathParams& bath, const Velocity& v) {
    bath.validate();
    return mean_relative_speed(bath.theta0, norm(v - bath.u0));
}

KernelParams kernel_shape(const BathParams& bath) {
    bath.validate();
    KernelParams kp;
    kp.e = bath.e;
    kp.theta0 = bath.theta0;
    kp.u0 = bath.u0;
    kp.mu = 2.0 * (1.0 - bath.e) / (1.0 + bath.e);
    kp.beta0 = 1.0 / (8.0 * bath.theta0);
    return kp;
}

KernelParams calibrate_kernel(const BathParams& bath, CalibrationReport* report) {
    KernelParams kp = kernel_shape(bath);
    const double c = 2.0 + kp.mu;
    const double ref = shell_integral(kp.beta0, c, 0.0, 1.0).value;
    const double sigma0 = mean_relative_speed(bath.theta0, 0.0);
    kp.c0 = sigma0 / ref;
    if (!(kp.c0 > 0.0) || !std::isfinite(kp.c0)) throw NumericalError("calibrate_kernel: invalid C0");
    if (report) {
        report->c0 = kp.c0;
        report->c0ClosedForm = sigma0 * kp.beta0 * c * c / (2.0 * kPi);
        report->referenceIntegral = ref;
        report->column.clear();
        report->row.clear();
        const double st = std::sqrt(bath.theta0);
        for (double x : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0}) {
            const Vec3 w = bath.u0 + Vec3{0.0, 0.0, x * st};
            NormalizationCheck col;
            col.speed = x * st;
            col.integral = kernel_column_integral(kp, w).value;
            col.sigma = collision_frequency_sigma(bath, w);
            col.relResidual = std::abs(col.integral - col.sigma) / col.sigma;
            report->column.push_back(col);
            NormalizationCheck row;
            row.speed = col.speed;
            row.sigma = col.sigma;
            const auto r = kernel_row_integral(kp, w);
            row.divergent = !std::isfinite(r.value);
            row.integral = r.value;
            row.relResidual = row.divergent ? std::numeric_limits<double>::infinity()
                                            : std::abs(r.value - row.sigma) / row.sigma;
            report->row.push_back(row);
        }
    }
    return kp;
}

double log_kernel_k(const KernelParams& kp, const Velocity& v, const Velocity& w) {
    const Pair p = bath_frame(kp, v, w);
    const double t = (1.0 + kp.mu) * p.qn + (norm2(p.v) - norm2(p.w)) / p.qn;
    return std::log(kp.c0) - std::log(p.qn) - kp.beta0 * t * t;
}

double kernel_k(const KernelParams& kp, const Velocity& v, const Velocity& w) {
    const Pair p = bath_frame(kp, v, w);
    const double t = (1.0 + kp.mu) * p.qn + (norm2(p.v) - norm2(p.w)) / p.qn;
    return kp.c0 / p.qn * std::exp(-kp.beta0 * t * t);
}

double kernel_k_alt(const KernelParams& kp, const Velocity& v, const Velocity& w) {
    const Pair p = bath_frame(kp, v, w);
    const double t = (2.0 + kp.mu) * p.qn + 2.0 * dot(p.q, p.w) / p.qn;
    return kp.c0 / p.qn * std::exp(-kp.beta0 * t * t);
}

double kernel_G(const KernelParams& kp, const Velocity& v, const Velocity& w) {
    const Pair p = bath_frame(kp, v, w);
    // sqrt(M(w)/M(v)) = exp(A#(|v|^2 - |w|^2)/2)
    const double logRatio = 0.5 * kp.a_sharp() * (norm2(p.v) - norm2(p.w));
    return std::exp(log_kernel_k(kp, v, w) + logRatio);
}

IntegralResult kernel_column_integral(const KernelParams& kp, const Velocity& w) {
    return shell_integral(kp.beta0, 2.0 + kp.mu, norm(w - kp.u0), kp.c0);
}

IntegralResult kernel_row_integral(const KernelParams& kp, const Velocity& v) {
    if (kp.mu <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    return shell_integral(kp.beta0, kp.mu, norm(v - kp.u0), kp.c0);
}

IntegralResult H_weighted_scaled(const KernelParams& kp, const Velocity& w, double a, double s) {
    if (!(a > 0.0)) throw InputError("H_weighted: a must be positive");
    if (!(s > 0.0 && s <= 1.0)) throw InputError("H_weighted: s outside (0,1]");
    const double wn = norm(w - kp.u0);
    const double c = 2.0 + kp.mu, b = kp.beta0;
    const double shift = a * std::pow(wn, s);
    const double rhoMax = (2.0 * wn + 16.0 / std::sqrt(b)) / c;
    if (wn < 1e-12) {
        auto f = [&](double rho) { return rho * 2.0 * std::exp(-b * c * c * rho * rho + a * std::pow(rho, s)); };
        auto r = integrate_adaptive(f, 0.0, rhoMax, 1e-11);
        return {2.0 * kPi * kp.c0 * r.value, 2.0 * kPi * kp.c0 * r.error};
    }
    auto logf = [&](double rho, double y) {
        const double t = c * rho + 2.0 * wn * y;
        const double v2 = std::max(0.0, rho * rho + wn * wn + 2.0 * rho * wn * y);
        return std::log(rho) - b * t * t + a * std::pow(v2, 0.5 * s) - shift;
    };
    auto ridge = [&](double rho) { return -c * rho / (2.0 * wn); };
    auto r = nested_shell(logf, ridge, 2.0 * wn / c, rhoMax, 1e-10);
    return {kp.c0 * r.value, kp.c0 * r.error};
}

IntegralResult H_weighted(const KernelParams& kp, const Velocity& w, double a, double s) {
    auto r = H_weighted_scaled(kp, w, a, s);
    const double f = std::exp(a * std::pow(norm(w - kp.u0), s));
    return {r.value * f, r.error * f};
}

IntegralResult G_power_integral(const KernelParams& kp, const Velocity& w, double p, double q) {
    if (!(p > 0.0 && p < 3.0)) throw InputError("G_power_integral: p outside (0,3)");
    const double wn = norm(w - kp.u0);
    const double c = 2.0 + kp.mu, b = kp.beta0, as = kp.a_sharp();
    const double logC = p * std::log(kp.c0);
    auto logf = [&](double rho, double y) {
        const double t = c * rho + 2.0 * wn * y;
        const double dv2 = rho * rho + 2.0 * rho * wn * y;  // |v|^2 - |w|^2
        const double vn = std::sqrt(std::max(0.0, wn * wn + dv2));
        return logC + (2.0 - p) * std::log(rho) - p * b * t * t + 0.5 * p * as * dv2 - q * std::log1p(vn);
    };
    auto ridge = [&](double rho) { return wn > 0.0 ? -rho / (2.0 * wn) : -2.0; };
    const double rhoMax = 14.0 / ((1.0 + kp.mu) * std::sqrt(p * b));
    return nested_shell(logf, ridge, 0.0, rhoMax, 1e-10);
}

MaxwellianParams elastic_steady_state(const BathParams& bath) {
    bath.validate();
    return {1.0, bath.u0, (1.0 + bath.e) / (3.0 - bath.e) * bath.theta0};
}

double bath_moment(const BathParams& bath, double p) {
    bath.validate();
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("bath_moment: p must be >= 0");
    if (norm2(bath.u0) == 0.0)
        return std::exp(p * std::log(2.0 * bath.theta0) + std::lgamma(p + 1.5) - std::lgamma(1.5));
    // w = u0 + sqrt(theta0) z with z standard normal; radial x polar product rule
    const double st = std::sqrt(bath.theta0), un = norm(bath.u0);
    static const QuadratureRule rr = gauss_legendre(160, 0.0, 14.0);
    static const QuadratureRule yy = gauss_legendre(96);
    double acc = 0.0;
    for (std::size_t i = 0; i < rr.nodes.size(); ++i) {
        const double rho = rr.nodes[i];
        const double radial = rho * rho * std::exp(-0.5 * rho * rho);
        double ang = 0.0;
        for (std::size_t j = 0; j < yy.nodes.size(); ++j) {
            const double w2 = un * un + bath.theta0 * rho * rho + 2.0 * st * rho * un * yy.nodes[j];
            ang += yy.weights[j] * std::pow(std::max(0.0, w2), p);
        }
        acc += rr.weights[i] * radial * ang;
    }
    return acc * 2.0 * kPi * std::pow(2.0 * kPi, -1.5);
}

}  // namespace gbath
