#include "catts/backward.hpp"

#include <cmath>
#include <vector>

namespace catts {

namespace {

constexpr std::size_t kMaxDepth = 100000000;

}  // namespace

Eigen::VectorXd apply_feedback_map(const ModelSpec& model, std::span<const CategoryValue> ybar,
                                   const Eigen::VectorXd& x) {
    if (!has_feedback(model)) {
        throw std::invalid_argument("feedback map requires a model with lagged log-odds");
    }
    const int k = n_categories(model) - 1;
    const int p = logodds_lags(model);
    if (x.size() != k * p) {
        throw std::invalid_argument("state stack has size " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(k * p));
    }
    std::vector<LogOdds> lambdas;
    lambdas.reserve(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        lambdas.emplace_back(x.segment(i * k, k));
    }
    Eigen::VectorXd out(x.size());
    out.head(k) = eval_logodds(model, ybar, lambdas).values();
    if (p > 1) {
        out.tail(k * (p - 1)) = x.head(k * (p - 1));
    }
    return out;
}

std::size_t required_backward_depth(const ContractionCertificate& cert, double x0_norm, double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    const double radius = x0_norm + cert.stationary_bound();
    if (radius == 0.0) {
        return 0;
    }
    for (std::size_t s = 0; s < kMaxDepth; ++s) {
        if (cert.composition_lipschitz(s) * radius <= tol) {
            return s;
        }
    }
    throw StabilityError("contraction too slow to reach the requested tolerance");
}

BackwardLogOdds stationary_logodds_backward(const ModelSpec& model, std::span<const CategoryValue> y_past,
                                            const Eigen::VectorXd& x0, double tol) {
    const auto cert = contraction_certificate(model);
    const int q = observation_lags(model);
    const std::size_t depth = required_backward_depth(cert, x0.norm(), tol);
    const std::size_t needed = (q == 0 || depth == 0) ? 0 : depth + static_cast<std::size_t>(q) - 1;
    if (y_past.size() < needed) {
        throw InsufficientHistoryError("past of length " + std::to_string(y_past.size()) +
                                           " is too short for tolerance; need " + std::to_string(needed) +
                                           " observations",
                                       needed);
    }
    Eigen::VectorXd x = x0;
    for (std::size_t j = depth; j >= 1; --j) {
        const auto ybar = q == 0 ? std::span<const CategoryValue>{} : y_past.subspan(j - 1, static_cast<std::size_t>(q));
        x = apply_feedback_map(model, ybar, x);
    }
    return BackwardLogOdds{std::move(x), depth, cert.composition_lipschitz(depth) * (x0.norm() + cert.stationary_bound())};
}

}  // namespace catts
