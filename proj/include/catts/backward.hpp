#pragma once

#include "catts/stability.hpp"

#include <span>
#include <stdexcept>

namespace catts {

/// The supplied past is too short to certify the requested tolerance.
class InsufficientHistoryError : public std::invalid_argument {
public:
    InsufficientHistoryError(const std::string& what, std::size_t required)
        : std::invalid_argument(what), required_length(required) {}

    std::size_t required_length;
};

/// Stacked log-odds (lambda_{t-1}', ..., lambda_{t-p}') computed from the infinite past.
struct BackwardLogOdds {
    Eigen::VectorXd stack;
    /// Number of composed maps.
    std::size_t depth = 0;
    /// Certified distance to the limit; the same bound holds for any start vector of no larger norm.
    double bound = 0.0;
};

/// One step G_ybar(x) = (f(x_1..x_p; ybar_1..ybar_q), x_1, ..., x_{p-1}), ybar newest first.
[[nodiscard]] Eigen::VectorXd apply_feedback_map(const ModelSpec& model, std::span<const CategoryValue> ybar,
                                                 const Eigen::VectorXd& x);

/// Smallest composition depth s whose certified distance to the limit is <= tol from a start of norm x0_norm.
[[nodiscard]] std::size_t required_backward_depth(const ContractionCertificate& cert, double x0_norm, double tol);

/**
 * @brief G_{ybar_1} o ... o G_{ybar_s}(x0), the stationary log-odds stack given the past.
 *
 * y_past is ordered newest first (y_past[0] = Y_{t-1}); ybar_j is
 * (y_past[j-1], ..., y_past[j+q-2]). The depth s is the smallest depth whose
 * contraction bound puts the result within tol of the limit H(ybar_1, ybar_2, ...),
 * so two start vectors give results within 2 tol of each other.
 *
 * Throws StabilityError when the model is not a contraction and
 * InsufficientHistoryError (carrying the required length) when y_past is short.
 */
[[nodiscard]] BackwardLogOdds stationary_logodds_backward(const ModelSpec& model,
                                                          std::span<const CategoryValue> y_past,
                                                          const Eigen::VectorXd& x0, double tol);

}  // namespace catts
