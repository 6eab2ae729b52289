#pragma once

#include <vector>

namespace gbath {

struct BathParams;

// Speed nodes on [0, cutoff] with weights that include the 4 pi r^2 shell factor,
// so sum_i weights[i] f(nodes[i]) approximates the 3D integral of a radial f.
struct SpeedGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double cutoff = 0.0;

    int size() const { return static_cast<int>(nodes.size()); }
    void validate() const;
};

// Gauss-Legendre nodes mapped to [0, cutoff].
SpeedGrid make_speed_grid(int n, double cutoff);

// cutoff = 8 sqrt(max(theta0, Theta#))
SpeedGrid default_speed_grid(const BathParams& bath, int n = 200);

}  // namespace gbath
