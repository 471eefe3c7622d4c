#include "catts/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace catts {

namespace {

constexpr int kMaxHalvings = 60;
constexpr double kRoundingSlack = 1e-13;

struct Design {
    Eigen::MatrixXd X;
    /// Zero-based category of each modelled observation; N - 1 is the reference.
    std::vector<int> y;
    int n_cat = 2;
};

Design build_design(const CovariateLogistic& model, const SeriesPath& data) {
    validate(ModelSpec{model});
    const auto q = static_cast<std::size_t>(model.q);
    const std::size_t n = data.size();
    if (n <= q) {
        throw std::invalid_argument("likelihood needs more than q = " + std::to_string(q) + " observations");
    }
    if (model.covariate_dim > 0) {
        if (!data.z || data.z->size() != n) {
            throw std::invalid_argument("model needs one covariate row per observation");
        }
    } else if (data.z && !data.z->empty() && data.z->front().size() > 0) {
        throw std::invalid_argument("data carries covariates but the model uses none");
    }
    Design d;
    d.n_cat = model.n_categories;
    d.X.resize(static_cast<Eigen::Index>(n - q), model.design_width());
    d.y.reserve(n - q);
    std::vector<CategoryValue> hist(q, CategoryValue(model.n_categories, model.n_categories));
    for (std::size_t t = q; t < n; ++t) {
        if (data.y[t].n_categories() != model.n_categories) {
            throw std::invalid_argument("observation category count does not match the model");
        }
        for (std::size_t s = 0; s < q; ++s) {
            hist[s] = data.y[t - 1 - s];
        }
        const Eigen::VectorXd* z = model.covariate_dim > 0 ? &(*data.z)[t] : nullptr;
        d.X.row(static_cast<Eigen::Index>(t - q)) = design_row(model, hist, z).transpose();
        d.y.push_back(data.y[t].index() - 1);
    }
    return d;
}

Eigen::MatrixXd coefficients(const Design& d, const Eigen::VectorXd& theta) {
    const auto k = d.n_cat - 1;
    const auto w = d.X.cols();
    if (theta.size() != k * w) {
        throw std::invalid_argument("theta has " + std::to_string(theta.size()) + " entries, expected " +
                                    std::to_string(k * w));
    }
    return Eigen::Map<const Eigen::MatrixXd>(theta.data(), w, k);
}

/// Linear predictors (rows: observations, cols: non-reference categories) and probabilities.
void predict(const Design& d, const Eigen::VectorXd& theta, Eigen::MatrixXd& eta, Eigen::MatrixXd& prob,
             Eigen::VectorXd& log_norm) {
    eta = d.X * coefficients(d, theta);
    const auto n = eta.rows();
    prob.resize(n, eta.cols());
    log_norm.resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double shift = std::max(0.0, eta.row(t).maxCoeff());
        const Eigen::ArrayXd e = (eta.row(t).array() - shift).exp();
        const double denom = std::exp(-shift) + e.sum();
        prob.row(t) = (e / denom).matrix().transpose();
        log_norm[t] = shift + std::log(denom);
    }
}

double loglik_from(const Design& d, const Eigen::MatrixXd& eta, const Eigen::VectorXd& log_norm) {
    double total = 0.0;
    const int ref = d.n_cat - 1;
    for (Eigen::Index t = 0; t < eta.rows(); ++t) {
        const int y = d.y[static_cast<std::size_t>(t)];
        total += (y == ref ? 0.0 : eta(t, y)) - log_norm[t];
    }
    return total;
}

double loglik_design(const Design& d, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd eta;
    Eigen::MatrixXd prob;
    Eigen::VectorXd log_norm;
    predict(d, theta, eta, prob, log_norm);
    return loglik_from(d, eta, log_norm);
}

ScoreHessian derivatives(const Design& d, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd eta;
    Eigen::MatrixXd prob;
    Eigen::VectorXd log_norm;
    predict(d, theta, eta, prob, log_norm);
    const int k = d.n_cat - 1;
    const auto w = d.X.cols();
    const auto n = d.X.rows();

    Eigen::MatrixXd resid = -prob;
    for (Eigen::Index t = 0; t < n; ++t) {
        const int y = d.y[static_cast<std::size_t>(t)];
        if (y < k) {
            resid(t, y) += 1.0;
        }
    }
    ScoreHessian out;
    out.gradient.resize(k * w);
    out.hessian.resize(k * w, k * w);
    for (int j = 0; j < k; ++j) {
        out.gradient.segment(j * w, w) = d.X.transpose() * resid.col(j);
        for (int l = j; l < k; ++l) {
            Eigen::VectorXd weight = -prob.col(j).cwiseProduct(prob.col(l));
            if (j == l) {
                weight += prob.col(j);
            }
            const Eigen::MatrixXd block = -(d.X.transpose() * weight.asDiagonal() * d.X);
            out.hessian.block(j * w, l * w, w, w) = block;
            if (l != j) {
                out.hessian.block(l * w, j * w, w, w) = block.transpose();
            }
        }
    }
    return out;
}

}  // namespace

double loglik(const CovariateLogistic& model, const Eigen::VectorXd& theta, const SeriesPath& data) {
    return loglik_design(build_design(model, data), theta);
}

ScoreHessian score_and_hessian(const CovariateLogistic& model, const Eigen::VectorXd& theta, const SeriesPath& data) {
    return derivatives(build_design(model, data), theta);
}

FitResult fit_newton(const CovariateLogistic& model, const SeriesPath& data, const std::optional<Eigen::VectorXd>& init,
                     double tol, int max_iter) {
    if (!(tol > 0.0) || max_iter < 0) {
        throw std::invalid_argument("fit_newton needs tol > 0 and max_iter >= 0");
    }
    const Design d = build_design(model, data);
    FitResult res;
    std::vector<bool> seen(static_cast<std::size_t>(d.n_cat), false);
    for (int y : d.y) {
        seen[static_cast<std::size_t>(y)] = true;
    }
    for (int c = 0; c < d.n_cat; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            res.warnings.push_back("category " + std::to_string(c + 1) + " is never observed");
        }
    }

    Eigen::VectorXd theta = init ? *init : Eigen::VectorXd::Zero(model.n_params());
    if (theta.size() != model.n_params()) {
        throw std::invalid_argument("initial theta has the wrong length");
    }
    double ll = loglik_design(d, theta);
    ScoreHessian sh = derivatives(d, theta);
    double gnorm = sh.gradient.lpNorm<Eigen::Infinity>();

    int iter = 0;
    while (gnorm >= tol && iter < max_iter) {
        const Eigen::MatrixXd info = -sh.hessian;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        const Eigen::VectorXd diag = ldlt.vectorD();
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            diag.minCoeff() <= 1e-12 * std::max(1.0, diag.cwiseAbs().maxCoeff())) {
            if (theta.lpNorm<Eigen::Infinity>() > kSeparationThreshold) {
                throw SeparationError("Newton iterates diverged (|theta|_inf > 50); likely complete separation");
            }
            throw SingularHessianError("negative Hessian is not positive definite at iteration " +
                                       std::to_string(iter));
        }
        const Eigen::VectorXd step = ldlt.solve(sh.gradient);
        double scale = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        double ll_new = ll;
        for (int h = 0; h <= kMaxHalvings; ++h) {
            candidate = theta + scale * step;
            ll_new = loglik_design(d, candidate);
            if (std::isfinite(ll_new) && ll_new >= ll) {
                accepted = true;
                break;
            }
            // a drop at rounding level still counts if the score shrinks
            if (std::isfinite(ll_new) && ll - ll_new <= kRoundingSlack * (1.0 + std::abs(ll)) &&
                derivatives(d, candidate).gradient.lpNorm<Eigen::Infinity>() < gnorm) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        ++iter;
        if (!accepted) {
            res.warnings.push_back("line search stalled at iteration " + std::to_string(iter));
            break;
        }
        theta = candidate;
        ll = ll_new;
        sh = derivatives(d, theta);
        const double gnorm_new = sh.gradient.lpNorm<Eigen::Infinity>();
        if (theta.lpNorm<Eigen::Infinity>() > kSeparationThreshold && gnorm_new >= tol) {
            throw SeparationError("Newton iterates diverged (|theta|_inf > 50) without the score vanishing; "
                                  "likely complete separation");
        }
        gnorm = gnorm_new;
    }

    res.theta_hat = theta;
    res.loglik = ll;
    res.gradient_norm = gnorm;
    res.hessian = sh.hessian;
    res.iterations = iter;
    res.converged = gnorm < tol;

    const Eigen::MatrixXd info = -sh.hessian;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
        throw SingularHessianError("negative Hessian is not positive definite at the estimate");
    }
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    res.std_errors = cov.diagonal().cwiseSqrt();
    return res;
}

}  // namespace catts
