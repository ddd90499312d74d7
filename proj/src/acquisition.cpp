#include "droplet/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "droplet/lhs.hpp"
#include "droplet/rng.hpp"

namespace droplet {

double normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double acq_ei(double mean, double sd, double best) {
    const double delta = best - mean;
    if (sd <= 0.0) {
        return std::max(delta, 0.0);
    }
    const double z = delta / sd;
    return std::max(0.0, delta * normal_cdf(z) + sd * normal_pdf(z));
}

double acq_mpi(double mean, double sd, double best) {
    if (sd <= 0.0) {
        return mean < best ? 1.0 : 0.0;
    }
    return normal_cdf((best - mean) / sd);
}

double acq_lcb(double mean, double sd, double beta) {
    return mean - beta * sd;
}

BatchProposal propose_batch(const GpModel& model, Acquisition kind, double lcb_beta,
                            int batch_size, double penalization_radius, int pool_size,
                            std::uint64_t seed) {
    if (batch_size < 1) {
        throw Error("batch size must be >= 1");
    }
    if (pool_size < batch_size) {
        throw InsufficientCandidatesError("candidate pool " + std::to_string(pool_size) +
                                          " is smaller than batch size " +
                                          std::to_string(batch_size));
    }
    const Eigen::Index n_train = model.train_x().rows();
    const std::size_t dims = static_cast<std::size_t>(model.train_x().cols());

    Rng pool_rng = make_rng(seed, "acq-pool");
    std::vector<ControlVector> candidates = lhs_sample(dims, pool_size, pool_rng);

    // Local refinement candidates around every training input.
    Rng perturb_rng = make_rng(seed, "acq-perturb");
    std::normal_distribution<double> noise(0.0, 0.02);
    for (Eigen::Index i = 0; i < n_train; ++i) {
        for (int rep = 0; rep < 2; ++rep) {
            ControlVector c(std::vector<double>(dims, 0.0));
            for (std::size_t d = 0; d < dims; ++d) {
                c[d] = std::clamp(model.train_x()(i, static_cast<Eigen::Index>(d)) +
                                      noise(perturb_rng),
                                  0.0, 1.0);
            }
            candidates.push_back(std::move(c));
        }
    }

    const double best_seen = model.train_y().minCoeff();
    const std::size_t total = candidates.size();
    std::vector<double> raw(total);
    std::vector<double> desirability(total);
    for (std::size_t i = 0; i < total; ++i) {
        const GpPosterior post = model.posterior(candidates[i]);
        const double sd = std::sqrt(post.variance);
        switch (kind) {
            case Acquisition::Ei: raw[i] = acq_ei(post.mean, sd, best_seen); break;
            case Acquisition::Mpi: raw[i] = acq_mpi(post.mean, sd, best_seen); break;
            case Acquisition::Lcb: raw[i] = acq_lcb(post.mean, sd, lcb_beta); break;
        }
    }
    if (kind == Acquisition::Lcb) {
        // Lower LCB is better; shift into a nonnegative higher-is-better score.
        const double worst = *std::max_element(raw.begin(), raw.end());
        for (std::size_t i = 0; i < total; ++i) desirability[i] = worst - raw[i];
    } else {
        desirability = raw;
    }

    BatchProposal proposal;
    std::vector<bool> taken(total, false);
    for (int pick = 0; pick < batch_size; ++pick) {
        std::size_t best_idx = total;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < total; ++i) {
            if (taken[i]) continue;
            // Skip exact duplicates of already-selected points.
            bool duplicate = false;
            for (const ControlVector& sel : proposal.points) {
                if (sel == candidates[i]) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            if (desirability[i] > best_score) {
                best_score = desirability[i];
                best_idx = i;
            }
        }
        if (best_idx == total) {
            throw InsufficientCandidatesError("ran out of distinct candidates after " +
                                              std::to_string(pick) + " picks");
        }
        taken[best_idx] = true;
        proposal.points.push_back(candidates[best_idx]);
        proposal.acq_values.push_back(raw[best_idx]);

        if (pick + 1 < batch_size) {
            for (std::size_t i = 0; i < total; ++i) {
                if (taken[i]) continue;
                const double dist = distance(candidates[i], candidates[best_idx]);
                desirability[i] *= std::min(1.0, dist / penalization_radius);
            }
        }
    }
    return proposal;
}

}  // namespace droplet
