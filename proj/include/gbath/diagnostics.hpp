#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gbath/background.hpp"
#include "gbath/ensemble.hpp"
#include "gbath/grid.hpp"

namespace gbath {

// ---- moments ----

struct MomentEntry {
    double value = 0.0;
    double stdError = 0.0;
};

struct MomentTable {
    std::map<double, MomentEntry> entries;
    // leave-one-block-out values, aligned across p, for propagating errors of derived quantities
    std::map<double, std::vector<double>> replicates;
    double alpha = 1.0;
    double time = 0.0;
    std::uint64_t N = 0;
    double mass = 0.0;

    bool has(double p) const { return entries.count(p) > 0; }
    const MomentEntry& at(double p) const;
    nlohmann::json to_json() const;
};

MomentTable moments(const ParticleEnsemble& ensemble, const std::vector<double>& pList, int blocks = 64);

struct RenormalizedMoments {
    double a = 1.0;
    double b = 0.5;
    std::map<double, double> z;
    double K = 0.0;            // max over p >= 1 of z_p^{1/p}
    double growthRatio = 0.0;  // z_pmax^{1/pmax} / z_{pmax/2}^{2/pmax}; <= 1 means no super-geometric growth
};

RenormalizedMoments renormalized_moments(const MomentTable& table, double a, double b);

// ---- tails ----

struct TailFit {
    double s = 0.0;
    double r = 0.0;
    double quality = 0.0;  // rms residual of the profile fit
    std::size_t tailSamples = 0;
    bool wideInterval = false;
};

// Fits P(|V| > R) ~ R^{3-s} exp(-r R^s) on the outer 5% order statistics.
TailFit tail_order_fit(const ParticleEnsemble& ensemble);
TailFit tail_order_fit(std::vector<double> speeds);

// ---- density estimates ----

struct RadialDensity {
    std::vector<double> edges;  // size n+1
    std::vector<double> values; // shell mass / shell volume
    std::vector<double> errors;
    std::vector<std::uint64_t> counts;
    std::vector<double> masses;
    double weight = 0.0;

    int size() const { return static_cast<int>(values.size()); }
    double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    double shell_volume(int i) const;
    double total_mass() const;
};

// Shell histogram of |v| (nShells = 0 selects sqrt(N); rmax = 0 selects the largest speed).
RadialDensity radial_density(const ParticleEnsemble& ensemble, int nShells = 0, double rmax = 0.0);

// Gaussian-kernel estimate of F(|v|) with reflection at the origin (Silverman bandwidth).
struct SmoothedDensity {
    std::vector<double> speeds;
    std::vector<double> values;
    std::vector<double> errors;
    double bandwidth = 0.0;
};

SmoothedDensity smoothed_density(const ParticleEnsemble& ensemble, const std::vector<double>& speeds);

// log g tabulated on speeds (interpolated linearly in |v|^2) plus a piecewise-constant
// proposal used for importance sampling.
struct RadialProfile {
    std::vector<double> speeds;
    std::vector<double> logValues;
    std::vector<double> cellEdges;   // proposal cells, size speeds.size()+1
    std::vector<double> cellMasses;  // proposal mass per cell
    double excludedMass = 0.0;
    std::size_t excludedCells = 0;

    double log_value(double r) const;
};

RadialProfile profile_from_density(const RadialDensity& density, std::uint64_t minCount = 10);
RadialProfile profile_from_grid(const SpeedGrid& grid, const std::vector<double>& values);

// ---- entropy dissipation ----

struct EntropyDissipation {
    double alpha = 1.0;
    double value = 0.0;
    double stdError = 0.0;
    std::uint64_t samples = 0;
    double excludedMass = 0.0;
};

struct EntropyComparison {
    EntropyDissipation atAlpha;
    EntropyDissipation elastic;
    double difference = 0.0;  // D_alpha - D_1 on common random numbers
    double differenceStdError = 0.0;
};

EntropyDissipation entropy_dissipation(const RadialProfile& g, double alpha, std::uint64_t samples = 20000,
                                       std::uint64_t seed = 1, int sphereOrder = 16);
EntropyComparison entropy_dissipation_difference(const RadialProfile& g, double alpha, std::uint64_t samples = 20000,
                                                 std::uint64_t seed = 1, int sphereOrder = 16);

// ---- norms and distances ----

enum class NormSpace { X, Y };

struct WeightedNorm {
    double value = 0.0;
    bool divergentTail = false;
};

WeightedNorm weighted_norm(const SpeedGrid& grid, const std::vector<double>& f, NormSpace space, double a = 0.1,
                           double s = 0.5);
WeightedNorm weighted_norm(const RadialDensity& density, NormSpace space, double a = 0.1, double s = 0.5);

struct MaxwellianDistance {
    double dL1 = 0.0;
    double dY = 0.0;
    MaxwellianParams maxwellian;
};

// Distance of the shell histogram to a Maxwellian; by default the one sharing the
// ensemble's mass, momentum and temperature.
MaxwellianDistance distance_to_maxwellian(const ParticleEnsemble& ensemble,
                                          const std::optional<MaxwellianParams>& reference = std::nullopt,
                                          int nShells = 0, double rmax = 0.0, double a = 0.1, double s = 0.5);

// L1 distance between the speed histograms of two ensembles on common shells.
double l1_distance(const ParticleEnsemble& a, const ParticleEnsemble& b, int nShells, double rmax);

// Self-distance between the pooled first and second halves of a steady window.
double noise_floor(const std::vector<ParticleEnsemble>& window, int nShells, double rmax);

// ---- pointwise envelopes ----

struct Envelope {
    double a0 = 0.0;   // lower: a0^{-1} exp(-a0 |v|^2)
    double a = 0.0;    // upper: exp(-a |v|^2 + muA)
    double muA = 0.0;
    double rMin = 0.0; // checked range
    double rMax = 0.0;
};

struct PointwiseReport {
    Envelope envelope;
    bool lowerHolds = false;
    bool upperHolds = false;
    double worstLowerZ = 0.0;  // max over points of (L - F)/err
    double worstUpperZ = 0.0;  // max over points of (F - U)/err
    std::size_t checkedPoints = 0;
    std::size_t excludedPoints = 0;
    SmoothedDensity density;

    bool holds() const { return lowerHolds && upperHolds; }
    nlohmann::json to_json() const;
};

// Fits the tightest envelope to one steady state on [2h, rMax].
PointwiseReport pointwise_bounds_check(const ParticleEnsemble& ensemble, double rMax, int points = 80);
// Verifies a given envelope against a density estimate.
PointwiseReport verify_envelope(const SmoothedDensity& density, const Envelope& env);
// One envelope valid for all reports: largest a0, smallest a, and the matching muA.
Envelope common_envelope(const std::vector<PointwiseReport>& reports);

// ---- stationary moment inequality ----

struct MomentInequality {
    double p = 2.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double slackStdError = 0.0;
    bool pass = false;
    // same inequality with the alpha-dependent coefficient in place of gamma_p
    double sharpSlack = 0.0;
    double sharpSlackStdError = 0.0;
};

MomentInequality stationary_moment_inequality(const MomentTable& table, const BathParams& bath, double p);

// ---- statistics helpers ----

double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slopeStdError = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gbath
