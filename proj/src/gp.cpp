#include "droplet/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "droplet/rng.hpp"

namespace droplet {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;

double matern52_scaled(double r) {
    const double a = kSqrt5 * r;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyperparams& hyper) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = hyper.signal_variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double w = (x(i, c) - x(j, c)) / hyper.lengthscales[c];
                r2 += w * w;
            }
            const double v = hyper.signal_variance * matern52_scaled(std::sqrt(r2));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Packs hyperparameters as [log ls..., log sf2, log sn2, mean].
Eigen::VectorXd pack(const GpHyperparams& hyper) {
    const std::size_t d = hyper.lengthscales.size();
    Eigen::VectorXd theta(d + 3);
    for (std::size_t i = 0; i < d; ++i) theta[static_cast<Eigen::Index>(i)] =
        std::log(hyper.lengthscales[i]);
    theta[static_cast<Eigen::Index>(d)] = std::log(hyper.signal_variance);
    theta[static_cast<Eigen::Index>(d) + 1] = std::log(hyper.noise_variance);
    theta[static_cast<Eigen::Index>(d) + 2] = hyper.mean_const;
    return theta;
}

GpHyperparams unpack(const Eigen::VectorXd& theta, std::size_t d) {
    GpHyperparams hyper;
    hyper.lengthscales.resize(d);
    for (std::size_t i = 0; i < d; ++i) hyper.lengthscales[i] =
        std::exp(theta[static_cast<Eigen::Index>(i)]);
    hyper.signal_variance = std::exp(theta[static_cast<Eigen::Index>(d)]);
    hyper.noise_variance = std::exp(theta[static_cast<Eigen::Index>(d) + 1]);
    hyper.mean_const = theta[static_cast<Eigen::Index>(d) + 2];
    return hyper;
}

struct Bounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    void clamp(Eigen::VectorXd& theta) const {
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            theta[i] = std::clamp(theta[i], lo[i], hi[i]);
        }
    }
};

Bounds make_bounds(const GpFitOptions& opts, std::size_t d, double y_lo, double y_hi) {
    Bounds b;
    b.lo.resize(static_cast<Eigen::Index>(d) + 3);
    b.hi.resize(static_cast<Eigen::Index>(d) + 3);
    for (std::size_t i = 0; i < d; ++i) {
        b.lo[static_cast<Eigen::Index>(i)] = std::log(opts.lengthscale_min);
        b.hi[static_cast<Eigen::Index>(i)] = std::log(opts.lengthscale_max);
    }
    b.lo[static_cast<Eigen::Index>(d)] = std::log(opts.signal_min);
    b.hi[static_cast<Eigen::Index>(d)] = std::log(opts.signal_max);
    b.lo[static_cast<Eigen::Index>(d) + 1] = std::log(opts.noise_min);
    b.hi[static_cast<Eigen::Index>(d) + 1] = std::log(opts.noise_max);
    b.lo[static_cast<Eigen::Index>(d) + 2] = y_lo - 1.0;
    b.hi[static_cast<Eigen::Index>(d) + 2] = y_hi + 1.0;
    return b;
}

// Projected L-BFGS ascent on the log marginal likelihood.
Eigen::VectorXd maximize_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             Eigen::VectorXd theta, const Bounds& bounds, int max_iterations,
                             double* final_value) {
    const std::size_t d = static_cast<std::size_t>(x.cols());
    bounds.clamp(theta);

    auto eval = [&](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
        return log_marginal_likelihood(x, y, unpack(t, d), g);
    };

    Eigen::VectorXd grad(theta.size());
    double f = eval(theta, &grad);
    if (!std::isfinite(f)) {
        *final_value = -std::numeric_limits<double>::infinity();
        return theta;
    }

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
    constexpr std::size_t kMemory = 8;

    for (int iter = 0; iter < max_iterations; ++iter) {
        // Two-loop recursion on the negated gradient (we maximize).
        Eigen::VectorXd q = grad;
        std::vector<double> rho, alpha_coef;
        rho.reserve(history.size());
        alpha_coef.resize(history.size());
        for (const auto& [s, yv] : history) rho.push_back(1.0 / s.dot(yv));
        for (std::size_t i = history.size(); i-- > 0;) {
            const auto& [s, yv] = history[i];
            alpha_coef[i] = rho[i] * s.dot(q);
            q -= alpha_coef[i] * yv;
        }
        if (!history.empty()) {
            const auto& [s, yv] = history.back();
            q *= s.dot(yv) / yv.dot(yv);
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const auto& [s, yv] = history[i];
            const double beta = rho[i] * yv.dot(q);
            q += (alpha_coef[i] - beta) * s;
        }
        Eigen::VectorXd direction = q;
        if (direction.dot(grad) <= 0.0) {
            direction = grad;  // fall back to steepest ascent
        }

        double step = (iter == 0 && history.empty())
                          ? 0.1 / std::max(1.0, grad.template lpNorm<Eigen::Infinity>())
                          : 1.0;
        Eigen::VectorXd theta_new;
        Eigen::VectorXd grad_new(theta.size());
        double f_new = -std::numeric_limits<double>::infinity();
        bool improved = false;
        for (int bt = 0; bt < 30; ++bt) {
            theta_new = theta + step * direction;
            bounds.clamp(theta_new);
            f_new = eval(theta_new, &grad_new);
            if (std::isfinite(f_new) && f_new > f + 1e-12) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;

        const Eigen::VectorXd s = theta_new - theta;
        const Eigen::VectorXd yv = grad - grad_new;  // negated-gradient difference
        if (s.dot(yv) > 1e-12) {
            history.emplace_back(s, yv);
            if (history.size() > kMemory) history.pop_front();
        }
        const double delta = f_new - f;
        theta = std::move(theta_new);
        grad = std::move(grad_new);
        f = f_new;
        if (delta < 1e-10 * (1.0 + std::abs(f))) break;
        if (grad.template lpNorm<Eigen::Infinity>() < 1e-7) break;
    }
    *final_value = f;
    return theta;
}

}  // namespace

double matern52(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                const GpHyperparams& hyper) {
    double r2 = 0.0;
    for (Eigen::Index c = 0; c < a.size(); ++c) {
        const double w = (a[c] - b[c]) / hyper.lengthscales[static_cast<std::size_t>(c)];
        r2 += w * w;
    }
    return hyper.signal_variance * matern52_scaled(std::sqrt(r2));
}

double log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const GpHyperparams& hyper, Eigen::VectorXd* grad) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();

    const Eigen::MatrixXd k_signal = kernel_matrix(x, hyper);
    Eigen::MatrixXd k_noisy = k_signal;
    k_noisy.diagonal().array() += hyper.noise_variance;

    Eigen::LLT<Eigen::MatrixXd> llt(k_noisy);
    if (llt.info() != Eigen::Success) {
        return -std::numeric_limits<double>::infinity();
    }

    const Eigen::VectorXd residual = y.array() - hyper.mean_const;
    const Eigen::VectorXd alpha = llt.solve(residual);

    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        log_det += 2.0 * std::log(llt.matrixL()(i, i));
    }
    const double lml = -0.5 * residual.dot(alpha) - 0.5 * log_det -
                       0.5 * n * std::log(2.0 * M_PI);

    if (grad != nullptr) {
        grad->resize(d + 3);
        const Eigen::MatrixXd k_inv =
            llt.solve(Eigen::MatrixXd::Identity(n, n));
        // dLML/dtheta_j = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta_j)
        const Eigen::MatrixXd w = alpha * alpha.transpose() - k_inv;

        for (Eigen::Index c = 0; c < d; ++c) {
            Eigen::MatrixXd dk(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                dk(i, i) = 0.0;
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    double r2 = 0.0;
                    for (Eigen::Index cc = 0; cc < d; ++cc) {
                        const double ww =
                            (x(i, cc) - x(j, cc)) / hyper.lengthscales[static_cast<std::size_t>(cc)];
                        r2 += ww * ww;
                    }
                    const double a = kSqrt5 * std::sqrt(r2);
                    const double wc =
                        (x(i, c) - x(j, c)) / hyper.lengthscales[static_cast<std::size_t>(c)];
                    const double v = hyper.signal_variance * (5.0 / 3.0) * (1.0 + a) *
                                     std::exp(-a) * wc * wc;
                    dk(i, j) = v;
                    dk(j, i) = v;
                }
            }
            (*grad)[c] = 0.5 * w.cwiseProduct(dk).sum();
        }
        (*grad)[d] = 0.5 * w.cwiseProduct(k_signal).sum();
        (*grad)[d + 1] = 0.5 * hyper.noise_variance * w.trace();
        (*grad)[d + 2] = alpha.sum();
    }
    return lml;
}

GpModel GpModel::with_hyperparams(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  GpHyperparams hyper) {
    GpModel model;
    model.x_ = x;
    model.y_ = y;
    model.hyper_ = std::move(hyper);

    Eigen::MatrixXd k = kernel_matrix(x, model.hyper_);
    k.diagonal().array() += model.hyper_.noise_variance;

    // Jitter escalation for near-singular systems (duplicate inputs etc.).
    double jitter = 0.0;
    for (double try_jitter : {0.0, 1e-10, 1e-8, 1e-6, 1e-4}) {
        Eigen::MatrixXd k_try = k;
        k_try.diagonal().array() += try_jitter;
        model.llt_.compute(k_try);
        if (model.llt_.info() == Eigen::Success) {
            jitter = try_jitter;
            k = std::move(k_try);
            break;
        }
        if (try_jitter == 1e-4) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
            std::ostringstream os;
            os << "kernel matrix is singular at max jitter 1e-4 (condition estimate ";
            if (es.info() == Eigen::Success && es.eigenvalues()[0] != 0.0) {
                os << es.eigenvalues()[es.eigenvalues().size() - 1] / es.eigenvalues()[0];
            } else {
                os << "inf";
            }
            os << ")";
            throw SingularKernelError(os.str());
        }
    }
    model.jitter_ = jitter;
    model.alpha_ = model.llt_.solve(Eigen::VectorXd(y.array() - model.hyper_.mean_const));

    double log_det = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        log_det += 2.0 * std::log(model.llt_.matrixL()(i, i));
    }
    model.lml_ = -0.5 * (y.array() - model.hyper_.mean_const).matrix().dot(model.alpha_) -
                 0.5 * log_det - 0.5 * x.rows() * std::log(2.0 * M_PI);
    return model;
}

GpModel GpModel::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const GpFitOptions& opts) {
    if (x.rows() < 2) {
        throw Error("GP fit needs at least 2 samples");
    }
    const std::size_t d = static_cast<std::size_t>(x.cols());
    const double y_mean = y.mean();
    const double y_var = (y.array() - y_mean).square().sum() / std::max<double>(1.0, y.size() - 1);
    const Bounds bounds = make_bounds(opts, d, y.minCoeff(), y.maxCoeff());

    // Restart 0 is a fixed heuristic start; the rest are seeded draws.
    GpHyperparams start;
    start.lengthscales.assign(d, 0.3);
    start.signal_variance = std::clamp(y_var, 1e-4, opts.signal_max);
    start.noise_variance = 1e-4;
    start.mean_const = y_mean;

    Rng rng(derive_seed(opts.seed, "gp-restarts"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double best_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = pack(start);
    for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
        GpHyperparams init = start;
        if (restart > 0) {
            for (std::size_t c = 0; c < d; ++c) {
                init.lengthscales[c] =
                    std::exp(std::log(0.05) + unit(rng) * (std::log(2.0) - std::log(0.05)));
            }
            const double sf_lo = std::max(opts.signal_min, 0.1 * std::max(y_var, 1e-4));
            const double sf_hi = std::min(opts.signal_max, 10.0 * std::max(y_var, 1e-4));
            init.signal_variance =
                std::exp(std::log(sf_lo) + unit(rng) * (std::log(sf_hi) - std::log(sf_lo)));
            init.noise_variance =
                std::exp(std::log(1e-8) + unit(rng) * (std::log(1e-2) - std::log(1e-8)));
            init.mean_const = y_mean + 0.2 * (unit(rng) - 0.5);
        }
        double value = 0.0;
        Eigen::VectorXd theta =
            maximize_lml(x, y, pack(init), bounds, opts.max_iterations, &value);
        if (value > best_value) {
            best_value = value;
            best_theta = std::move(theta);
        }
    }
    return with_hyperparams(x, y, unpack(best_theta, d));
}

GpModel GpModel::fit(const std::vector<Sample>& samples, const GpFitOptions& opts) {
    if (samples.size() < 2) {
        throw Error("GP fit needs at least 2 samples");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index d = static_cast<Eigen::Index>(samples.front().x.size());
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < d; ++c) {
            x(i, c) = s.x[static_cast<std::size_t>(c)];
        }
        y[i] = s.loss;
    }
    return fit(x, y, opts);
}

GpPosterior GpModel::posterior(const Eigen::RowVectorXd& query) const {
    const Eigen::Index n = x_.rows();
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k_star[i] = matern52(query, x_.row(i), hyper_);
    }
    GpPosterior post;
    post.mean = hyper_.mean_const + k_star.dot(alpha_);
    const Eigen::VectorXd v = llt_.solve(k_star);
    post.variance = std::max(0.0, hyper_.signal_variance - k_star.dot(v));
    return post;
}

GpPosterior GpModel::posterior(const ControlVector& x) const {
    Eigen::RowVectorXd q(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        q[static_cast<Eigen::Index>(i)] = x[i];
    }
    return posterior(q);
}

}  // namespace droplet
