#pragma once

#include <vector>

#include "droplet/types.hpp"

namespace droplet {

enum class FeasibilityScope { AcquiredOnly, All };

// Fraction of in-scope samples with loss below threshold. AcquiredOnly
// excludes the LHS initialization batch (batch_index 0).
double feasibility_fraction(const ExperimentState& state, double threshold,
                            FeasibilityScope scope);

// Prefix minima of the sample losses, in sample order.
std::vector<double> running_minimum(const ExperimentState& state);

struct DensityEstimate {
    std::vector<double> coordinates;
    std::vector<double> densities;
    bool point_mass = false;      // all coordinates identical; densities empty
    double point_location = 0.0;  // set when point_mass
    double bandwidth = 0.0;
};

// Gaussian KDE of one coordinate on [0,1]: Scott bandwidth n^(-1/5)*sigma,
// boundary-corrected by reflection at 0 and 1.
DensityEstimate parameter_density(const ExperimentState& state, std::size_t dim,
                                  int grid_points = 256);

struct TopologyGrid {
    std::size_t dim_a = 0;
    std::size_t dim_b = 0;
    int resolution = 0;
    std::vector<double> values;      // row-major, dim_a along rows
    std::vector<std::uint8_t> mask;  // 1 = data, 0 = farther than max_distance from every sample
    double bandwidth = 0.1;
    double max_distance = 0.25;
};

// Gaussian-weighted interpolation of the observed losses onto a 2-d grid
// over the chosen dimension pair; cells beyond max_distance from every
// sample are masked out rather than extrapolated.
TopologyGrid topology_grid(const ExperimentState& state, std::size_t dim_a, std::size_t dim_b,
                           int resolution = 64);

}  // namespace droplet
