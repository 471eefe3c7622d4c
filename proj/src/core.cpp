#include "catts/core.hpp"

#include <algorithm>
#include <cmath>

namespace catts {

CategoryValue::CategoryValue(int index, int n_categories) : index_(index), n_categories_(n_categories) {
    if (n_categories < 2) {
        throw std::invalid_argument("number of categories must be at least 2");
    }
    if (index < 1 || index > n_categories) {
        throw std::invalid_argument("category index " + std::to_string(index) + " outside 1.." +
                                    std::to_string(n_categories));
    }
}

Eigen::VectorXd CategoryValue::one_hot() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_categories_ - 1);
    if (!is_reference()) {
        v[index_ - 1] = 1.0;
    }
    return v;
}

ProbabilityVector::ProbabilityVector(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) {
        throw std::invalid_argument("probability vector must be nonempty");
    }
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        if (!std::isfinite(probs_[i]) || probs_[i] < 0.0) {
            throw std::invalid_argument("probability entries must be finite and nonnegative");
        }
    }
    const double total = probs_.sum();
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw std::invalid_argument("probabilities sum to " + std::to_string(total) + ", not 1");
    }
}

LogOdds::LogOdds(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) {
        throw std::invalid_argument("log-odds vector must have at least one entry");
    }
    if (!values_.allFinite()) {
        throw std::invalid_argument("log-odds must be finite");
    }
}

ProbabilityVector softmax_link(const LogOdds& lambda) {
    const auto& z = lambda.values();
    const Eigen::Index k = z.size();
    // Shift by max(0, z_1, ..., z_{N-1}); the reference category carries log-odds 0.
    const double shift = std::max(0.0, z.maxCoeff());
    Eigen::VectorXd p(k + 1);
    for (Eigen::Index j = 0; j < k; ++j) {
        p[j] = std::exp(z[j] - shift);
    }
    p[k] = std::exp(-shift);
    p /= p.sum();
    return ProbabilityVector(std::move(p));
}

LogOdds inverse_link(const ProbabilityVector& p) {
    const auto& v = p.values();
    if (v.size() < 2) {
        throw std::invalid_argument("inverse_link needs at least two categories");
    }
    if ((v.array() <= 0.0).any()) {
        throw DomainError("inverse_link requires strictly positive probabilities");
    }
    const Eigen::Index k = v.size() - 1;
    const double log_ref = std::log(v[k]);
    Eigen::VectorXd lambda(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        lambda[j] = std::log(v[j]) - log_ref;
    }
    return LogOdds(std::move(lambda));
}

Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& p, double u) {
    if (!(u >= 0.0 && u < 1.0)) {
        throw std::invalid_argument("uniform draw must lie in [0, 1)");
    }
    double cumulative = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (p[j] > 0.0) {
            last_positive = j;
        }
        cumulative += p[j];
        if (u < cumulative) {
            return j;
        }
    }
    // Rounding left the total just below u.
    return last_positive;
}

CategoryValue sample_category(const ProbabilityVector& p, double u) {
    const auto j = sample_index(p.values(), u);
    return CategoryValue(static_cast<int>(j) + 1, static_cast<int>(p.size()));
}

std::vector<CategoryValue> reference_history(int n_categories, std::size_t length) {
    return std::vector<CategoryValue>(length, CategoryValue(n_categories, n_categories));
}

}  // namespace catts
