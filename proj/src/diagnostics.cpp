#include "gbath/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gbath/error.hpp"
#include "gbath/kinematics.hpp"
#include "gbath/quadrature.hpp"
#include "gbath/rng.hpp"

namespace gbath {

namespace {

constexpr double kPi = std::numbers::pi;

double shell_volume(double a, double b) { return 4.0 * kPi / 3.0 * (b * b * b - a * a * a); }

std::vector<double> speeds_of(const ParticleEnsemble& ens) {
    std::vector<double> s(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) s[i] = norm(ens.velocities[i]);
    return s;
}

// Shell masses of a weighted sample on [0, rmax] with an overflow bin appended.
std::vector<double> shell_masses(const ParticleEnsemble& ens, int nShells, double rmax) {
    std::vector<double> m(static_cast<std::size_t>(nShells) + 1, 0.0);
    const double h = rmax / nShells;
    for (const auto& v : ens.velocities) {
        const double r = norm(v);
        const auto k = r >= rmax ? static_cast<std::size_t>(nShells) : static_cast<std::size_t>(r / h);
        m[std::min(k, static_cast<std::size_t>(nShells))] += ens.weight;
    }
    return m;
}

// P(|V| <= r) for V ~ N(u, theta I).
double speed_cdf(const MaxwellianParams& mp, double r) {
    if (r <= 0.0) return 0.0;
    const double x2 = r * r / mp.theta;
    const double lam = norm2(mp.u) / mp.theta;
    if (lam == 0.0) return boost::math::cdf(boost::math::chi_squared_distribution<double>(3.0), x2);
    return boost::math::cdf(boost::math::non_central_chi_squared_distribution<double>(3.0, lam), x2);
}

double weight_inverse(double r, double a, double s) { return std::exp(a * std::pow(r, s)); }

}  // namespace

// ---------------------------------------------------------------- moments

const MomentEntry& MomentTable::at(double p) const {
    const auto it = entries.find(p);
    if (it == entries.end()) {
        std::ostringstream os;
        os << "moment table: m_" << p << " missing";
        throw InputError(os.str());
    }
    return it->second;
}

nlohmann::json MomentTable::to_json() const {
    nlohmann::json e = nlohmann::json::array();
    for (const auto& [p, m] : entries) e.push_back({{"p", p}, {"value", m.value}, {"stdError", m.stdError}});
    return {{"alpha", alpha}, {"time", time}, {"N", N}, {"mass", mass}, {"moments", e}};
}

MomentTable moments(const ParticleEnsemble& ensemble, const std::vector<double>& pList, int blocks) {
    for (double p : pList)
        if (!(p >= 0.0 && p <= 8.0)) throw InputError("moments: p outside [0, 8]");
    if (ensemble.size() == 0) throw InputError("moments: empty ensemble");
    const std::size_t n = ensemble.size();
    const std::size_t B = std::max<std::size_t>(2, std::min<std::size_t>(static_cast<std::size_t>(blocks), n));
    const std::size_t P = pList.size();
    std::vector<double> sums(P * B, 0.0);
    std::vector<std::size_t> blockSize(B, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i * B / n;
        ++blockSize[b];
        const double r2 = norm2(ensemble.velocities[i]);
        for (std::size_t k = 0; k < P; ++k) {
            const double p = pList[k];
            sums[k * B + b] += p == 0.0 ? 1.0 : p == 1.0 ? r2 : p == 2.0 ? r2 * r2 : std::pow(r2, p);
        }
    }
    MomentTable t;
    t.alpha = ensemble.alpha;
    t.time = ensemble.time;
    t.N = n;
    t.mass = ensemble.mass();
    const double w = ensemble.weight, nd = static_cast<double>(n);
    for (std::size_t k = 0; k < P; ++k) {
        double total = 0.0;
        for (std::size_t b = 0; b < B; ++b) total += sums[k * B + b];
        std::vector<double> reps(B);
        for (std::size_t b = 0; b < B; ++b)
            reps[b] = (total - sums[k * B + b]) * w * nd / (nd - static_cast<double>(blockSize[b]));
        const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / static_cast<double>(B);
        double ss = 0.0;
        for (double r : reps) ss += (r - mean) * (r - mean);
        MomentEntry e;
        e.value = total * w;
        e.stdError = std::sqrt(ss * static_cast<double>(B - 1) / static_cast<double>(B));
        if (pList[k] == 0.0) e.stdError = 0.0;
        t.entries[pList[k]] = e;
        t.replicates[pList[k]] = std::move(reps);
    }
    return t;
}

RenormalizedMoments renormalized_moments(const MomentTable& table, double a, double b) {
    if (!(a >= 1.0)) throw InputError("renormalized_moments: a must be >= 1");
    if (!(b > 0.0 && b < 1.0)) throw InputError("renormalized_moments: b outside (0,1)");
    RenormalizedMoments out;
    out.a = a;
    out.b = b;
    double pmax = 0.0;
    for (const auto& [p, m] : table.entries) {
        if (!(m.value > 0.0)) continue;
        out.z[p] = std::exp(std::log(m.value) - std::lgamma(a * p + b));
        if (p >= 1.0) {
            out.K = std::max(out.K, std::pow(out.z[p], 1.0 / p));
            pmax = std::max(pmax, p);
        }
    }
    if (pmax >= 2.0) {
        // compare the geometric rate at pmax with the one at the closest p to pmax/2
        double half = 1.0, best = 1e300;
        for (const auto& [p, z] : out.z)
            if (p >= 1.0 && std::abs(p - 0.5 * pmax) < best) best = std::abs(p - 0.5 * pmax), half = p;
        out.growthRatio = std::pow(out.z[pmax], 1.0 / pmax) / std::pow(out.z[half], 1.0 / half);
    }
    return out;
}

// ---------------------------------------------------------------- tails

TailFit tail_order_fit(const ParticleEnsemble& ensemble) { return tail_order_fit(speeds_of(ensemble)); }

TailFit tail_order_fit(std::vector<double> speeds) {
    const std::size_t n = speeds.size();
    if (n < 10000) throw InputError("tail_order_fit: need at least 1e4 samples");
    std::sort(speeds.begin(), speeds.end());
    const std::size_t tail = (n + 19) / 20;
    const std::size_t first = n - tail, last = n - 5;  // the extreme order statistics are too noisy
    std::vector<double> R, logR, mlogP;
    for (std::size_t i = first; i < last; ++i) {
        if (!(speeds[i] > 0.0)) continue;
        R.push_back(speeds[i]);
        logR.push_back(std::log(speeds[i]));
        mlogP.push_back(-std::log((static_cast<double>(n - i) - 0.5) / static_cast<double>(n)));
    }
    const std::size_t m = R.size();
    if (m < 20) throw InputError("tail_order_fit: too few positive tail samples");

    // y(s) = -log P + (3 - s) log R = c + r R^s, least squares in (c, r) for fixed s
    auto profile = [&](double s, double* rate) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::vector<double> x(m), y(m);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = std::pow(R[i], s);
            y[i] = mlogP[i] + (3.0 - s) * logR[i];
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double md = static_cast<double>(m);
        const double slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
        const double icpt = (sy - slope * sx) / md;
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = y[i] - icpt - slope * x[i];
            ss += d * d;
        }
        if (rate) *rate = slope;
        return std::sqrt(ss / md);
    };
    double bestS = 0.2, bestRes = 1e300;
    for (double s = 0.2; s <= 4.0 + 1e-9; s += 0.01) {
        const double res = profile(s, nullptr);
        if (res < bestRes) bestRes = res, bestS = s;
    }
    // golden-section refinement around the grid optimum
    double lo = std::max(0.2, bestS - 0.01), hi = std::min(4.0, bestS + 0.01);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = profile(x1, nullptr), f2 = profile(x2, nullptr);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = profile(x1, nullptr);
        } else {
            lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = profile(x2, nullptr);
        }
    }
    TailFit fit;
    fit.s = 0.5 * (lo + hi);
    fit.quality = profile(fit.s, &fit.r);
    fit.tailSamples = m;
    fit.wideInterval = m < 500;
    return fit;
}

// ---------------------------------------------------------------- densities

double RadialDensity::shell_volume(int i) const { return gbath::shell_volume(edges[i], edges[i + 1]); }

double RadialDensity::total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

RadialDensity radial_density(const ParticleEnsemble& ensemble, int nShells, double rmax) {
    if (ensemble.size() == 0) throw InputError("radial_density: empty ensemble");
    const auto speeds = speeds_of(ensemble);
    const double top = *std::max_element(speeds.begin(), speeds.end());
    if (nShells <= 0) nShells = std::max(1, static_cast<int>(std::lround(std::sqrt(double(ensemble.size())))));
    if (rmax <= 0.0) rmax = top * (1.0 + 1e-12) + 1e-300;
    if (top >= rmax) throw InputError("radial_density: rmax below the largest speed");
    RadialDensity d;
    d.weight = ensemble.weight;
    d.edges.resize(nShells + 1);
    for (int i = 0; i <= nShells; ++i) d.edges[i] = rmax * i / nShells;
    d.counts.assign(nShells, 0);
    const double h = rmax / nShells;
    for (double r : speeds) ++d.counts[std::min<std::size_t>(static_cast<std::size_t>(r / h), nShells - 1)];
    d.masses.resize(nShells);
    d.values.resize(nShells);
    d.errors.resize(nShells);
    for (int i = 0; i < nShells; ++i) {
        const double vol = d.shell_volume(i);
        d.masses[i] = static_cast<double>(d.counts[i]) * d.weight;
        d.values[i] = d.masses[i] / vol;
        d.errors[i] = std::sqrt(static_cast<double>(d.counts[i])) * d.weight / vol;
    }
    return d;
}

SmoothedDensity smoothed_density(const ParticleEnsemble& ensemble, const std::vector<double>& speeds) {
    auto r = speeds_of(ensemble);
    const std::size_t n = r.size();
    if (n < 2) throw InputError("smoothed_density: need at least two samples");
    std::sort(r.begin(), r.end());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / double(n);
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / double(n - 1));
    const double iqr = r[(3 * n) / 4] - r[n / 4];
    SmoothedDensity out;
    out.bandwidth = 0.9 * std::min(sd, iqr / 1.34) * std::pow(double(n), -0.2);
    const double h = out.bandwidth;
    const double mass = ensemble.mass();
    const double norm0 = 1.0 / (double(n) * h * std::sqrt(2.0 * kPi));
    const double roughness = 1.0 / (2.0 * std::sqrt(kPi));  // int K^2 for the Gaussian kernel
    out.speeds = speeds;
    out.values.resize(speeds.size());
    out.errors.resize(speeds.size());
    for (std::size_t k = 0; k < speeds.size(); ++k) {
        const double x = speeds[k];
        double acc = 0.0;
        const auto lo = std::lower_bound(r.begin(), r.end(), x - 9.0 * h);
        const auto hi = std::upper_bound(r.begin(), r.end(), x + 9.0 * h);
        for (auto it = lo; it != hi; ++it) {
            const double z = (x - *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        // reflection at the origin
        for (auto it = r.begin(); it != r.end() && *it < 9.0 * h - x; ++it) {
            const double z = (x + *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        const double fr = acc * norm0;  // density of |V| (probability)
        const double shell = 4.0 * kPi * x * x;
        out.values[k] = x > 0.0 ? mass * fr / shell : 0.0;
        out.errors[k] = x > 0.0 ? mass * std::sqrt(fr * roughness / (double(n) * h)) / shell : 0.0;
    }
    return out;
}

double RadialProfile::log_value(double r) const {
    return RadialLogTable{speeds, logValues}(r);
}

RadialProfile profile_from_density(const RadialDensity& density, std::uint64_t minCount) {
    const int n = density.size();
    int firstOk = -1, lastOk = -1;
    for (int i = 0; i < n; ++i) {
        if (density.counts[i] >= minCount) {
            if (firstOk < 0) firstOk = i;
            lastOk = i;
        }
    }
    if (firstOk < 0) throw InputError("profile_from_density: no resolved shells");
    RadialProfile p;
    for (int i = firstOk; i <= lastOk; ++i) {
        if (density.counts[i] == 0) {
            std::ostringstream os;
            os << "profile_from_density: empty shell " << i << " inside the resolved hull";
            throw InputError(os.str());
        }
        if (density.counts[i] >= minCount) {
            p.speeds.push_back(density.center(i));
            p.logValues.push_back(std::log(density.values[i]));
        } else {
            ++p.excludedCells;
        }
        if (p.cellEdges.empty()) p.cellEdges.push_back(density.edges[i]);
        p.cellEdges.push_back(density.edges[i + 1]);
        p.cellMasses.push_back(density.masses[i]);
    }
    for (int i = 0; i < n; ++i)
        if (i < firstOk || i > lastOk) p.excludedMass += density.masses[i];
    p.excludedCells += static_cast<std::size_t>(firstOk + (n - 1 - lastOk));
    return p;
}

RadialProfile profile_from_grid(const SpeedGrid& grid, const std::vector<double>& values) {
    grid.validate();
    if (values.size() != grid.nodes.size()) throw InputError("profile_from_grid: size mismatch");
    RadialProfile p;
    p.speeds = grid.nodes;
    p.cellEdges.push_back(0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw InputError("profile_from_grid: density must be strictly positive");
        p.logValues.push_back(std::log(values[i]));
        p.cellEdges.push_back(i + 1 < values.size() ? 0.5 * (grid.nodes[i] + grid.nodes[i + 1]) : grid.cutoff);
        p.cellMasses.push_back(grid.weights[i] * values[i]);
    }
    return p;
}

// ---------------------------------------------------------------- entropy dissipation

namespace {

struct Sampler {
    const RadialProfile& g;
    std::vector<double> cumulative;
    double total = 0.0;

    explicit Sampler(const RadialProfile& prof) : g(prof) {
        if (prof.cellMasses.empty() || prof.speeds.empty()) throw InputError("entropy_dissipation: empty profile");
        for (double m : prof.cellMasses) cumulative.push_back(total += std::max(m, 0.0));
        if (!(total > 0.0)) throw InputError("entropy_dissipation: profile carries no mass");
    }

    // velocity and the ratio g(v)/p(v)
    std::pair<Vec3, double> draw(const std::array<double, 4>& u) const {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u[0] * total);
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
        const double a = g.cellEdges[k], b = g.cellEdges[k + 1];
        const double r = std::cbrt(a * a * a + u[1] * (b * b * b - a * a * a));
        const double c = 2.0 * u[2] - 1.0, s = std::sqrt(std::max(0.0, 1.0 - c * c)), phi = 2.0 * kPi * u[3];
        const Vec3 v{r * s * std::cos(phi), r * s * std::sin(phi), r * c};
        const double p = g.cellMasses[k] / (total * shell_volume(a, b));
        return {v, std::exp(g.log_value(r)) / p};
    }
};

struct Accumulator {
    double sum = 0.0, sum2 = 0.0;
    void add(double x) { sum += x, sum2 += x * x; }
    double mean(double n) const { return sum / n; }
    double se(double n) const { return std::sqrt(std::max(0.0, (sum2 / n - (sum / n) * (sum / n)) / (n - 1.0))); }
};

}  // namespace

EntropyComparison entropy_dissipation_difference(const RadialProfile& g, double alpha, std::uint64_t samples,
                                                 std::uint64_t seed, int sphereOrder) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("entropy_dissipation: alpha outside (0,1]");
    if (samples < 2) throw InputError("entropy_dissipation: need at least two samples");
    const Sampler sampler(g);
    const SphericalRule rule(sphereOrder, sphereOrder);
    const CounterRng rng(seed);
    Accumulator da, d1, dd;
    auto phi = [](double y) { return std::expm1(y) - y; };  // X - log X - 1 with y = log X
    for (std::uint64_t i = 0; i < samples; ++i) {
        const auto [v, wv] = sampler.draw(rng.uniform4(i, Phase::diagnostic, 0));
        const auto [w, ww] = sampler.draw(rng.uniform4(i, Phase::diagnostic, 1));
        const Vec3 q = v - w;
        const double qn = norm(q);
        if (qn == 0.0) {
            da.add(0.0), d1.add(0.0), dd.add(0.0);
            continue;
        }
        const double base = g.log_value(norm(v)) + g.log_value(norm(w));
        const Vec3 axis = q * (1.0 / qn);
        double sa = 0.0, s1 = 0.0;
        for (int k = 0; k < rule.size(); ++k) {
            const Vec3 s = rule.direction(k, axis);
            const Vec3 dA = collision_displacement(v, w, s, alpha);
            const Vec3 d1v = collision_displacement(v, w, s, 1.0);
            sa += rule.weight(k) * phi(g.log_value(norm(v + dA)) + g.log_value(norm(w - dA)) - base);
            s1 += rule.weight(k) * phi(g.log_value(norm(v + d1v)) + g.log_value(norm(w - d1v)) - base);
        }
        const double f = 0.5 * qn * wv * ww;
        da.add(f * sa);
        d1.add(f * s1);
        dd.add(f * (sa - s1));
    }
    const double n = static_cast<double>(samples);
    EntropyComparison out;
    out.atAlpha = {alpha, da.mean(n), da.se(n), samples, g.excludedMass};
    out.elastic = {1.0, d1.mean(n), d1.se(n), samples, g.excludedMass};
    out.difference = dd.mean(n);
    out.differenceStdError = dd.se(n);
    return out;
}

EntropyDissipation entropy_dissipation(const RadialProfile& g, double alpha, std::uint64_t samples, std::uint64_t seed,
                                       int sphereOrder) {
    return entropy_dissipation_difference(g, alpha, samples, seed, sphereOrder).atAlpha;
}

// ---------------------------------------------------------------- norms and distances

WeightedNorm weighted_norm(const SpeedGrid& grid, const std::vector<double>& f, NormSpace space, double a, double s) {
    if (!(a > 0.0)) throw InputError("weighted_norm: a must be positive");
    if (!(s > 0.0 && s <= 1.0)) throw InputError("weighted_norm: s outside (0,1]");
    if (f.size() != grid.nodes.size()) throw InputError("weighted_norm: size mismatch");
    WeightedNorm out;
    double peak = 0.0, edge = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = grid.nodes[i];
        const double bracket = space == NormSpace::Y ? std::sqrt(1.0 + r * r) : 1.0;
        const double term = grid.weights[i] * std::abs(f[i]) * weight_inverse(r, a, s) * bracket;
        out.value += term;
        const double integrand = r * r * std::abs(f[i]) * weight_inverse(r, a, s) * bracket;
        peak = std::max(peak, integrand);
        if (i + 1 == f.size()) edge = integrand;
    }
    out.divergentTail = peak > 0.0 && edge > 1e-6 * peak;
    return out;
}

WeightedNorm weighted_norm(const RadialDensity& density, NormSpace space, double a, double s) {
    if (!(a > 0.0)) throw InputError("weighted_norm: a must be positive");
    if (!(s > 0.0 && s <= 1.0)) throw InputError("weighted_norm: s outside (0,1]");
    WeightedNorm out;
    const int n = density.size();
    double tailPart = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = density.center(i);
        const double bracket = space == NormSpace::Y ? std::sqrt(1.0 + r * r) : 1.0;
        const double term = density.masses[i] * weight_inverse(r, a, s) * bracket;
        out.value += term;
        if (i >= n - std::max(1, n / 10)) tailPart += term;
    }
    out.divergentTail = out.value > 0.0 && tailPart > 0.01 * out.value;
    return out;
}

MaxwellianDistance distance_to_maxwellian(const ParticleEnsemble& ensemble,
                                          const std::optional<MaxwellianParams>& reference, int nShells,
                                          double rmax, double a, double s) {
    ensemble.validate();
    MaxwellianDistance out;
    out.maxwellian = reference ? *reference
                               : MaxwellianParams{ensemble.mass(), ensemble.mean_velocity(), ensemble.temperature()};
    out.maxwellian.validate();
    if (nShells <= 0) nShells = std::max(1, static_cast<int>(std::lround(std::sqrt(double(ensemble.size())))));
    if (rmax <= 0.0) {
        for (const auto& v : ensemble.velocities) rmax = std::max(rmax, norm(v));
        rmax *= 1.0 + 1e-12;
    }
    const auto masses = shell_masses(ensemble, nShells, rmax);
    const double h = rmax / nShells;
    double prev = 0.0;
    for (int k = 0; k <= nShells; ++k) {
        const double cdf = k < nShells ? speed_cdf(out.maxwellian, (k + 1) * h) : 1.0;
        const double mm = out.maxwellian.mass * (cdf - prev);
        prev = cdf;
        const double diff = std::abs(masses[k] - mm);
        const double r = k < nShells ? (k + 0.5) * h : rmax;
        out.dL1 += diff;
        out.dY += diff * weight_inverse(r, a, s) * std::sqrt(1.0 + r * r);
    }
    return out;
}

double l1_distance(const ParticleEnsemble& a, const ParticleEnsemble& b, int nShells, double rmax) {
    if (nShells < 1 || !(rmax > 0.0)) throw InputError("l1_distance: need positive shells and radius");
    const auto ma = shell_masses(a, nShells, rmax), mb = shell_masses(b, nShells, rmax);
    double d = 0.0;
    for (std::size_t k = 0; k < ma.size(); ++k) d += std::abs(ma[k] - mb[k]);
    return d;
}

double noise_floor(const std::vector<ParticleEnsemble>& window, int nShells, double rmax) {
    if (window.size() < 2) throw InputError("noise_floor: need at least two snapshots");
    const std::size_t h = window.size() / 2;
    const std::vector<ParticleEnsemble> first(window.begin(), window.begin() + static_cast<long>(h));
    const std::vector<ParticleEnsemble> second(window.begin() + static_cast<long>(h), window.end());
    return l1_distance(concatenate(first), concatenate(second), nShells, rmax);
}

// ---------------------------------------------------------------- pointwise envelopes

namespace {

double lower_env(double a0, double r) { return std::exp(-std::log(a0) - a0 * r * r); }

// smallest muA making exp(-a r^2 + muA) dominate F - 3 err at every usable point
double upper_shift(const SmoothedDensity& d, double a, double rMin, double rMax) {
    double mu = -1e300;
    for (std::size_t k = 0; k < d.speeds.size(); ++k) {
        const double r = d.speeds[k];
        if (r < rMin || r > rMax) continue;
        const double lowF = d.values[k] - 3.0 * d.errors[k];
        if (lowF > 0.0) mu = std::max(mu, std::log(lowF) + a * r * r);
    }
    return mu;
}

}  // namespace

nlohmann::json PointwiseReport::to_json() const {
    return {{"a0", envelope.a0},         {"a", envelope.a},
            {"muA", envelope.muA},       {"rMin", envelope.rMin},
            {"rMax", envelope.rMax},     {"lowerHolds", lowerHolds},
            {"upperHolds", upperHolds},  {"worstLowerZ", worstLowerZ},
            {"worstUpperZ", worstUpperZ}, {"checkedPoints", checkedPoints},
            {"excludedPoints", excludedPoints}, {"bandwidth", density.bandwidth}};
}

PointwiseReport verify_envelope(const SmoothedDensity& density, const Envelope& env) {
    PointwiseReport rep;
    rep.envelope = env;
    rep.density = density;
    rep.worstLowerZ = rep.worstUpperZ = -1e300;
    for (std::size_t k = 0; k < density.speeds.size(); ++k) {
        const double r = density.speeds[k];
        if (r < env.rMin || r > env.rMax || !(density.errors[k] > 0.0)) {
            ++rep.excludedPoints;
            continue;
        }
        ++rep.checkedPoints;
        const double F = density.values[k], err = density.errors[k];
        rep.worstLowerZ = std::max(rep.worstLowerZ, (lower_env(env.a0, r) - F) / err);
        rep.worstUpperZ = std::max(rep.worstUpperZ, (F - std::exp(-env.a * r * r + env.muA)) / err);
    }
    rep.lowerHolds = rep.checkedPoints > 0 && rep.worstLowerZ <= 3.0 + 1e-9;
    rep.upperHolds = rep.checkedPoints > 0 && rep.worstUpperZ <= 3.0 + 1e-9;
    return rep;
}

PointwiseReport pointwise_bounds_check(const ParticleEnsemble& ensemble, double rMax, int points) {
    if (!(rMax > 0.0) || points < 4) throw InputError("pointwise_bounds_check: bad range");
    std::vector<double> speeds(points);
    for (int k = 0; k < points; ++k) speeds[k] = rMax * (k + 1) / points;
    const auto dens = smoothed_density(ensemble, speeds);
    Envelope env;
    env.rMin = 2.0 * dens.bandwidth;
    env.rMax = rMax;

    // lower: a0^{-1} exp(-a0 r^2) decreases in a0 pointwise, so bisect for the smallest admissible a0
    auto lowerOk = [&](double a0) {
        for (std::size_t k = 0; k < speeds.size(); ++k) {
            const double r = speeds[k];
            if (r < env.rMin) continue;
            if (lower_env(a0, r) > dens.values[k] + 3.0 * dens.errors[k]) return false;
        }
        return true;
    };
    double lo = std::log(1e-4), hi = std::log(1e4);
    const bool lowerFound = lowerOk(std::exp(hi));
    for (int it = 0; it < 100 && lowerFound; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lowerOk(std::exp(mid)) ? hi : lo) = mid;
    }
    env.a0 = std::exp(hi);

    // upper: minimize the envelope mass e^mu (pi/a)^{3/2} over a
    auto cost = [&](double la) {
        const double a = std::exp(la);
        return upper_shift(dens, a, env.rMin, env.rMax) - 1.5 * la;
    };
    double l = std::log(1e-3), h = std::log(1e3);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = h - g * (h - l), x2 = l + g * (h - l), f1 = cost(x1), f2 = cost(x2);
    for (int it = 0; it < 100; ++it) {
        if (f1 < f2) {
            h = x2, x2 = x1, f2 = f1, x1 = h - g * (h - l), f1 = cost(x1);
        } else {
            l = x1, x1 = x2, f1 = f2, x2 = l + g * (h - l), f2 = cost(x2);
        }
    }
    env.a = std::exp(0.5 * (l + h));
    env.muA = upper_shift(dens, env.a, env.rMin, env.rMax);
    auto rep = verify_envelope(dens, env);
    rep.lowerHolds = rep.lowerHolds && lowerFound;
    rep.upperHolds = rep.upperHolds && env.muA > -1e299;
    return rep;
}

Envelope common_envelope(const std::vector<PointwiseReport>& reports) {
    if (reports.empty()) throw InputError("common_envelope: no reports");
    Envelope env = reports.front().envelope;
    for (const auto& r : reports) {
        env.a0 = std::max(env.a0, r.envelope.a0);
        env.a = std::min(env.a, r.envelope.a);
        env.rMin = std::max(env.rMin, r.envelope.rMin);
        env.rMax = std::min(env.rMax, r.envelope.rMax);
    }
    env.muA = -1e300;
    for (const auto& r : reports) env.muA = std::max(env.muA, upper_shift(r.density, env.a, env.rMin, env.rMax));
    return env;
}

// ---------------------------------------------------------------- stationary moment inequality

namespace {

double binomial(double p, double k) {
    return std::exp(std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0));
}

}  // namespace

MomentInequality stationary_moment_inequality(const MomentTable& table, const BathParams& bath, double p) {
    if (!(p >= 1.0)) throw InputError("stationary_moment_inequality: p must be >= 1");
    const int kp = static_cast<int>(std::floor((p + 1.0) / 2.0));
    std::vector<double> needed{0.5, p};
    for (int k = 1; k <= kp; ++k) {
        needed.push_back(k + 0.5);
        needed.push_back(p - k);
        needed.push_back(p - k + 0.5);
        needed.push_back(k);
    }
    for (double q : needed) table.at(q);  // throws on a missing moment
    const double Mp = bath_moment(bath, p), Mph = bath_moment(bath, p + 0.5);
    const double gp = std::min(1.0, 4.0 / (p + 1.0));
    const double gap = gamma_alpha_p(p, table.alpha).gammaAlphaP;

    // lhs and rhs as functions of a moment lookup, evaluated on the estimate and on each replicate
    auto evaluate = [&](auto m, double gamma) {
        double S = 0.0, St = 0.0;
        for (int k = 1; k <= kp; ++k) {
            const double c = binomial(p, k);
            S += c * (m(k + 0.5) * m(p - k) + m(p - k + 0.5) * m(double(k)));
            St += c * (m(k + 0.5) * bath_moment(bath, p - k) + m(p - k + 0.5) * bath_moment(bath, double(k)));
        }
        const double lhs = 3.0 * (1.0 - gamma) * std::pow(m(p), 1.0 + 1.0 / (2.0 * p));
        const double rhs = gamma * (S + St + m(0.5) * Mp + Mph);
        return std::pair{lhs, rhs};
    };
    auto point = [&](double q) { return table.at(q).value; };
    MomentInequality out;
    out.p = p;
    std::tie(out.lhs, out.rhs) = evaluate(point, gp);
    out.slack = out.rhs - out.lhs;
    const auto sharp = evaluate(point, gap);
    out.sharpSlack = sharp.second - sharp.first;

    const auto& reps = table.replicates;
    std::size_t B = reps.count(p) ? reps.at(p).size() : 0;
    for (double q : needed)
        if (!reps.count(q) || reps.at(q).size() != B) B = 0;
    if (B > 1) {
        std::vector<double> s1(B), s2(B);
        for (std::size_t b = 0; b < B; ++b) {
            auto rep = [&](double q) { return reps.at(q)[b]; };
            const auto x = evaluate(rep, gp), y = evaluate(rep, gap);
            s1[b] = x.second - x.first;
            s2[b] = y.second - y.first;
        }
        auto jk = [B](const std::vector<double>& v) {
            const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(B);
            double ss = 0.0;
            for (double x : v) ss += (x - m) * (x - m);
            return std::sqrt(ss * double(B - 1) / double(B));
        };
        out.slackStdError = jk(s1);
        out.sharpSlackStdError = jk(s2);
    }
    out.pass = out.slack > 3.0 * out.slackStdError && out.slack > 0.0;
    return out;
}

// ---------------------------------------------------------------- statistics

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw InputError("spearman: need matching samples of size >= 3");
    const auto rx = ranks(x), ry = ranks(y);
    const double n = double(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n, my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("fit_line: need matching samples of size >= 2");
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = y[i] - f.intercept - f.slope * x[i];
            ss += d * d;
        }
        f.slopeStdError = std::sqrt(ss / (n - 2.0) / sxx);
    }
    return f;
}

}  // namespace gbath
