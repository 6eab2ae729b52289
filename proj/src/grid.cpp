#include "gbath/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gbath/background.hpp"
#include "gbath/error.hpp"
#include "gbath/quadrature.hpp"

namespace gbath {

void SpeedGrid::validate() const {
    require(!nodes.empty() && nodes.size() == weights.size(), "speed grid: nodes and weights must match");
    require(cutoff > 0.0, "speed grid: cutoff must be positive");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        require(nodes[i] > 0.0 && nodes[i] < cutoff, "speed grid: node outside (0, cutoff)");
        require(i == 0 || nodes[i] > nodes[i - 1], "speed grid: nodes must increase");
        require(weights[i] > 0.0, "speed grid: weights must be positive");
    }
}

SpeedGrid make_speed_grid(int n, double cutoff) {
    if (n < 2) throw InputError("speed grid: need at least two nodes");
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InputError("speed grid: cutoff must be positive");
    const auto rule = gauss_legendre(n, 0.0, cutoff);
    SpeedGrid g;
    g.cutoff = cutoff;
    g.nodes = rule.nodes;
    g.weights.resize(n);
    for (int i = 0; i < n; ++i) g.weights[i] = rule.weights[i] * 4.0 * std::numbers::pi * rule.nodes[i] * rule.nodes[i];
    return g;
}

SpeedGrid default_speed_grid(const BathParams& bath, int n) {
    bath.validate();
    const double thetaSharp = elastic_steady_state(bath).theta;
    return make_speed_grid(n, 8.0 * std::sqrt(std::max(bath.theta0, thetaSharp)));
}

}  // namespace gbath
