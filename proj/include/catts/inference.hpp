#pragma once

#include "catts/models.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace catts {

/// Newton iterates ran off to infinity, the usual sign of complete separation.
class SeparationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularHessianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitResult {
    Eigen::VectorXd theta_hat;
    double loglik = 0.0;
    /// Sup-norm of the score at theta_hat.
    double gradient_norm = 0.0;
    Eigen::MatrixXd hessian;
    Eigen::VectorXd std_errors;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

struct ScoreHessian {
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

inline constexpr double kSeparationThreshold = 50.0;

/**
 * @brief Conditional log-likelihood of a CovariateLogistic model.
 *
 * The template fixes N, q and the covariate dimension; theta replaces its
 * coefficients. Observations t = q..n-1 contribute, each conditioned on the
 * previous q and on data.z[t]. Throws std::invalid_argument on shape errors.
 */
[[nodiscard]] double loglik(const CovariateLogistic& model, const Eigen::VectorXd& theta, const SeriesPath& data);

/// Score sum_t X_t'(y_t - p_t) and Hessian -sum_t X_t' (diag p_t - p_t p_t') X_t.
[[nodiscard]] ScoreHessian score_and_hessian(const CovariateLogistic& model, const Eigen::VectorXd& theta,
                                             const SeriesPath& data);

/**
 * @brief Damped Newton-Raphson for the conditional MLE.
 *
 * Steps are halved until the log-likelihood does not decrease, or decreases by
 * no more than rounding while the score shrinks. Converged when
 * the sup-norm of the score drops below tol. Standard errors are the square
 * roots of the diagonal of the inverse negative Hessian at theta_hat.
 */
[[nodiscard]] FitResult fit_newton(const CovariateLogistic& model, const SeriesPath& data,
                                   const std::optional<Eigen::VectorXd>& init = std::nullopt, double tol = 1e-8,
                                   int max_iter = 100);

}  // namespace catts
