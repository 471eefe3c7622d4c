#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace catts {

/// Sum-to-one tolerance for probability vectors. Violations are errors, never
/// silently renormalized.
inline constexpr double kSumTolerance = 1e-12;

/**
 * @brief One observation of a categorical series with N categories.
 *
 * Categories are labelled 1..N. Category N is the reference category and is
 * encoded by the zero vector of R^{N-1}; category j < N is the canonical
 * basis vector e_j.
 */
class CategoryValue {
public:
    CategoryValue(int index, int n_categories);

    [[nodiscard]] int index() const noexcept { return index_; }
    [[nodiscard]] int n_categories() const noexcept { return n_categories_; }
    [[nodiscard]] bool is_reference() const noexcept { return index_ == n_categories_; }

    /// Length N-1: e_index for a non-reference category, zero otherwise.
    [[nodiscard]] Eigen::VectorXd one_hot() const;

    friend bool operator==(const CategoryValue&, const CategoryValue&) = default;

private:
    int index_;
    int n_categories_;
};

/**
 * @brief Distribution over N categories (or over any finite state space).
 *
 * Entries are nonnegative and sum to one within kSumTolerance. Vectors produced
 * by softmax_link are strictly positive; zero entries are admitted so that the
 * same type can carry rows of shift-structured transition matrices and
 * degenerate laws fed to the coupling routines.
 */
class ProbabilityVector {
public:
    explicit ProbabilityVector(Eigen::VectorXd probs);

    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return probs_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return probs_.size(); }
    [[nodiscard]] double operator[](Eigen::Index i) const { return probs_[i]; }

private:
    Eigen::VectorXd probs_;
};

/// Conditional log-odds against the reference category, lambda_k = log(p_k / p_N).
class LogOdds {
public:
    explicit LogOdds(Eigen::VectorXd values);

    [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
    [[nodiscard]] int n_categories() const noexcept { return static_cast<int>(values_.size()) + 1; }
    [[nodiscard]] double operator[](Eigen::Index i) const { return values_[i]; }

private:
    Eigen::VectorXd values_;
};

/// Thrown when a probability is outside the domain of the logit map.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Multinomial-logit link: (F_1(lambda), ..., F_{N-1}(lambda), F_N(lambda)).
[[nodiscard]] ProbabilityVector softmax_link(const LogOdds& lambda);

/// Inverse link, lambda_k = log(p_k / p_N). Throws DomainError on entries <= 0.
[[nodiscard]] LogOdds inverse_link(const ProbabilityVector& p);

/// Inverse-CDF draw: category j is returned iff u falls in [P_{j-1}, P_j).
[[nodiscard]] CategoryValue sample_category(const ProbabilityVector& p, double u);

/// Same rule as sample_category but returns a zero-based state index, for
/// distributions over arbitrary finite state spaces.
[[nodiscard]] Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& p, double u);

/// Reference-category history of the given length.
[[nodiscard]] std::vector<CategoryValue> reference_history(int n_categories, std::size_t length);

}  // namespace catts
