#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "droplet/types.hpp"

namespace droplet {

// Matérn 5/2 ARD kernel plus constant mean.
struct GpHyperparams {
    std::vector<double> lengthscales;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
    double mean_const = 0.0;
};

struct GpFitOptions {
    int restarts = 5;
    int max_iterations = 150;
    std::uint64_t seed = 0;
    double lengthscale_min = 1e-3;
    double lengthscale_max = 1e3;
    double signal_min = 1e-8;
    double signal_max = 1e3;
    double noise_min = 1e-10;  // jitter floor
    double noise_max = 1.0;
};

struct GpPosterior {
    double mean = 0.0;
    double variance = 0.0;
};

double matern52(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                const GpHyperparams& hyper);

// Log marginal likelihood; optional gradient w.r.t.
// [log lengthscales..., log signal_variance, log noise_variance, mean_const].
double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const GpHyperparams& hyper, Eigen::VectorXd* grad = nullptr);

// Immutable fitted surrogate; safe to query from many threads at once.
class GpModel {
public:
    // Maximizes log marginal likelihood with multi-start projected L-BFGS.
    static GpModel fit(const std::vector<Sample>& samples, const GpFitOptions& opts = {});
    static GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const GpFitOptions& opts = {});

    // Factorizes with the given hyperparameters, no optimization.
    static GpModel with_hyperparams(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    GpHyperparams hyper);

    GpPosterior posterior(const ControlVector& x) const;
    GpPosterior posterior(const Eigen::RowVectorXd& x) const;

    const GpHyperparams& hyperparams() const { return hyper_; }
    double log_likelihood() const { return lml_; }
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& train_x() const { return x_; }
    const Eigen::VectorXd& train_y() const { return y_; }

private:
    GpModel() = default;

    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    GpHyperparams hyper_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

}  // namespace droplet
