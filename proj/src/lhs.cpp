#include "droplet/lhs.hpp"

#include <algorithm>
#include <numeric>

namespace droplet {

std::vector<ControlVector> lhs_sample(std::size_t dimensions, int strata, Rng& rng) {
    if (strata < 1) {
        throw InvalidKError("LHS strata count must be >= 1, got " + std::to_string(strata));
    }
    const auto k = static_cast<std::size_t>(strata);

    std::vector<ControlVector> points(k, ControlVector(std::vector<double>(dimensions, 0.0)));
    std::vector<std::size_t> perm(k);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t d = 0; d < dimensions; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < k; ++i) {
            const double u = unit(rng);
            // Uniform within stratum perm[i]; clamp keeps the top stratum closed at 1.
            const double v = (static_cast<double>(perm[i]) + u) / static_cast<double>(k);
            points[i][d] = std::min(v, 1.0);
        }
    }
    return points;
}

std::vector<ControlVector> lhs_sample(const ParameterSpace& space, int strata, Rng& rng) {
    return lhs_sample(space.size(), strata, rng);
}

}  // namespace droplet
