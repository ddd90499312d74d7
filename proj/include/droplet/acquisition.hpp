#pragma once

#include <cstdint>
#include <vector>

#include "droplet/gp.hpp"
#include "droplet/types.hpp"

namespace droplet {

double normal_pdf(double z);
double normal_cdf(double z);

// Closed forms of the improvement integrals, for minimization of the loss.
// sd = 0 falls back to the deterministic limits.
double acq_ei(double mean, double sd, double best);
double acq_mpi(double mean, double sd, double best);
double acq_lcb(double mean, double sd, double beta);

struct BatchProposal {
    std::vector<ControlVector> points;     // selection order preserved
    std::vector<double> acq_values;        // raw acquisition value of each pick
};

// Greedy batch selection over a dense candidate set (LHS pool plus local
// perturbations of the training inputs) with distance-capped local
// penalization: after each pick the remaining candidates' desirability is
// multiplied by min(1, ||x - x_sel|| / radius).
BatchProposal propose_batch(const GpModel& model, Acquisition kind, double lcb_beta,
                            int batch_size, double penalization_radius, int pool_size,
                            std::uint64_t seed);

}  // namespace droplet
