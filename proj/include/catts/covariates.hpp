#pragma once

#include "catts/models.hpp"
#include "catts/random.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace catts {

/// Row-stochastic matrices P_z indexed by a covariate vector z.
struct TransitionFamily {
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eval;
    std::size_t state_dim = 0;
    int covariate_dim = 0;
    /// Order q of the lagged-history chain when the family comes from a logistic model.
    std::optional<int> logistic_order;

    [[nodiscard]] Eigen::MatrixXd operator()(const Eigen::VectorXd& z) const { return eval(z); }

    /// P_z = transition_matrix(model, z) on E^q, for TruncatedLinear or CovariateLogistic.
    [[nodiscard]] static TransitionFamily from_model(const ModelSpec& model);
    /// P_z = P for every z.
    [[nodiscard]] static TransitionFamily constant(Eigen::MatrixXd P);
    /// P_z = matrices[round(z[0])], a finite environment.
    [[nodiscard]] static TransitionFamily indexed(std::vector<Eigen::MatrixXd> matrices);
};

/// Throws std::invalid_argument unless P is square with nonnegative rows summing to 1 within tol.
void require_stochastic(const Eigen::MatrixXd& P, double tol = 1e-10);

/// c(P) = 1/2 max_{x != y} sum_z |P(x, z) - P(y, z)|.
[[nodiscard]] double dobrushin(const Eigen::MatrixXd& P);

struct E1Result {
    bool pass = false;
    double min_entry = 0.0;
    std::size_t tuples_tested = 0;
    /// For logistic families: whether the shift structure of E^q alone makes m-fold products positive.
    std::optional<bool> structural_pass;
};

inline constexpr std::size_t kMaxE1Tuples = 10000;

/**
 * @brief Positivity of m-fold products P_{z_1} ... P_{z_m} over covariate samples.
 *
 * All |z_samples|^m tuples are tested when that is at most kMaxE1Tuples,
 * otherwise kMaxE1Tuples tuples drawn with Rng(seed).
 */
[[nodiscard]] E1Result e1_check(const TransitionFamily& family, std::span<const Eigen::VectorXd> z_samples, int m,
                                std::uint64_t seed = 42);

/// The certificate did not drop below tol/2 within max_depth matrices.
class CertificateNotReached : public std::runtime_error {
public:
    CertificateNotReached(const std::string& what, double achieved_certificate)
        : std::runtime_error(what), achieved(achieved_certificate) {}

    double achieved;
};

struct BackwardLimit {
    ProbabilityVector row;
    std::size_t depth = 0;
    /// Product of the Dobrushin coefficients of the m-blocks used.
    double contraction_certificate = 1.0;
};

/**
 * @brief Common row of lim_s P_{Z_{t-s+1}} ... P_{Z_t}.
 *
 * z_path is ordered oldest first and ends at Z_t. Matrices are multiplied on
 * the left in blocks of `block` consecutive times; the loop stops once the
 * product of block coefficients is <= tol/2, which puts every row within tol
 * (in sum-of-absolute-differences) of the limit.
 */
[[nodiscard]] BackwardLimit backward_row_limit(const TransitionFamily& family, std::span<const Eigen::VectorXd> z_path,
                                               double tol, std::size_t max_depth, int block = 1);

/// Exogenous covariate processes. The three built-in kinds are mixing; Custom is not certified.
class CovariateGenerator {
public:
    enum class Kind { IIDGaussian, GaussianAR1, BernoulliShift, Custom };
    using CustomFn = std::function<std::vector<Eigen::VectorXd>(std::size_t, Rng&)>;

    [[nodiscard]] static CovariateGenerator iid_gaussian(int dim = 1);
    /// Z_t = phi Z_{t-1} + sigma eps_t, started from its stationary law. Requires |phi| < 1.
    [[nodiscard]] static CovariateGenerator gaussian_ar1(double phi, double sigma, int dim = 1);
    /// Z_t = (eps_t + ... + eps_{t-window+1}) / sqrt(window) with i.i.d. standard normal eps.
    [[nodiscard]] static CovariateGenerator bernoulli_shift(int window, int dim = 1);
    [[nodiscard]] static CovariateGenerator custom(CustomFn fn, int dim);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] bool mixing_certified() const noexcept { return kind_ != Kind::Custom; }

    [[nodiscard]] std::vector<Eigen::VectorXd> generate(std::size_t n, std::uint64_t seed) const;

private:
    CovariateGenerator(Kind kind, int dim) : kind_(kind), dim_(dim) {}

    Kind kind_;
    int dim_;
    double phi_ = 0.0;
    double sigma_ = 1.0;
    int window_ = 1;
    CustomFn custom_;
};

/**
 * @brief Covariates first, then the response given the covariates.
 *
 * Z is drawn with derive_seed(seed, 0) and never sees Y; Y is drawn by
 * simulate() with derive_seed(seed, 1). Uncertified generators are refused
 * unless allow_uncertified is set.
 */
[[nodiscard]] SeriesPath simulate_joint(const CovariateGenerator& gen, const CovariateLogistic& model, std::size_t n,
                                        std::size_t burn_in, std::uint64_t seed, bool allow_uncertified = false);

/// A path uses a transition of probability zero.
class ImpossiblePathError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// sum_{i>=1} log P_{z_i}(x_{i-1}, x_i). states and z_path are aligned; z_path may be empty for covariate-free families.
[[nodiscard]] double conditional_loglik(const TransitionFamily& family, std::span<const std::size_t> states,
                                        std::span<const Eigen::VectorXd> z_path);

/// Indices in E^q of X_t = (Y_t, ..., Y_{t-q+1}) for t = q-1, ..., n-1.
[[nodiscard]] std::vector<std::size_t> lagged_states(std::span<const CategoryValue> y, int n_categories, int q);

}  // namespace catts
