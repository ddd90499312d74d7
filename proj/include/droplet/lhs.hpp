#pragma once

#include <vector>

#include "droplet/rng.hpp"
#include "droplet/types.hpp"

namespace droplet {

// Latin hypercube design over [0,1]^N: each dimension is split into K strata
// of equal marginal probability and every stratum receives exactly one point,
// with an independent random stratum-to-point permutation per dimension.
std::vector<ControlVector> lhs_sample(std::size_t dimensions, int strata, Rng& rng);

std::vector<ControlVector> lhs_sample(const ParameterSpace& space, int strata, Rng& rng);

}  // namespace droplet
