#pragma once

#include "catts/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace catts {

/// lambda_t = d + sum_{j=1}^{L} A_j Y_{t-j}. The truncation lag L is part of the model.
struct TruncatedLinear {
    int n_categories = 2;
    Eigen::VectorXd d;
    std::vector<Eigen::MatrixXd> A;

    [[nodiscard]] int lag_order() const { return static_cast<int>(A.size()); }
};

/// lambda_t = A0 + sum_{i=1}^{p} A_i lambda_{t-i} + sum_{i=1}^{q} B_i Y_{t-i}.
struct LinearFeedback {
    int n_categories = 2;
    Eigen::VectorXd A0;
    std::vector<Eigen::MatrixXd> A;
    std::vector<Eigen::MatrixXd> B;

    [[nodiscard]] int p() const { return static_cast<int>(A.size()); }
    [[nodiscard]] int q() const { return static_cast<int>(B.size()); }
};

/// Binary threshold model, lambda_t = d + beta1 lambda_{t-1}^+ + beta2 lambda_{t-1}^- + alpha Y_{t-1}
/// with x^+ = max(x, 0) and x^- = min(x, 0).
struct ThresholdBinary {
    double d = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha = 0.0;
};

/**
 * @brief Order-q multinomial logistic autoregression with exogenous covariates.
 *
 * g_j(y_{t-1}, ..., y_{t-q}; z_t) = c_j + sum_l Gamma_l[j, :] y_{t-l} + Delta[j, :] z_t.
 *
 * The flat parameter vector used by the estimator stacks one block per
 * non-reference category j, each laid out as the design row
 * (1, y_{t-1}', ..., y_{t-q}', z_t'):
 *   theta_j = (c_j, Gamma_1[j, :], ..., Gamma_q[j, :], Delta[j, :]).
 */
struct CovariateLogistic {
    int n_categories = 2;
    int q = 1;
    int covariate_dim = 0;
    Eigen::VectorXd intercept;
    std::vector<Eigen::MatrixXd> gamma;
    Eigen::MatrixXd delta;

    /// All-zero coefficients with the given shape.
    [[nodiscard]] static CovariateLogistic zeros(int n_categories, int q, int covariate_dim);

    /// Length of one design row: 1 + q (N-1) + covariate_dim.
    [[nodiscard]] int design_width() const { return 1 + q * (n_categories - 1) + covariate_dim; }
    [[nodiscard]] int n_params() const { return (n_categories - 1) * design_width(); }

    [[nodiscard]] Eigen::VectorXd theta() const;
    /// Same shape as *this with coefficients taken from a flat theta.
    [[nodiscard]] CovariateLogistic with_theta(const Eigen::VectorXd& theta) const;
};

using ModelSpec = std::variant<TruncatedLinear, LinearFeedback, ThresholdBinary, CovariateLogistic>;

/// Throws std::invalid_argument when the dimensions are inconsistent.
void validate(const ModelSpec& model);

[[nodiscard]] int n_categories(const ModelSpec& model);
[[nodiscard]] std::string family_name(const ModelSpec& model);
/// Number of lagged observations the model reads (L, q or 1).
[[nodiscard]] int observation_lags(const ModelSpec& model);
/// Number of lagged log-odds the model reads (0 unless the model has feedback).
[[nodiscard]] int logodds_lags(const ModelSpec& model);
[[nodiscard]] int covariate_dim(const ModelSpec& model);
[[nodiscard]] bool has_feedback(const ModelSpec& model);

/**
 * @brief Conditional log-odds lambda_t from the recent past.
 *
 * Histories are ordered newest first: y_history[0] is Y_{t-1},
 * lambda_history[0] is lambda_{t-1}. Longer histories are accepted and the
 * extra entries ignored. Throws std::invalid_argument for short histories and
 * for a covariate given to (or missing from) a model that does not use (or
 * needs) one.
 */
[[nodiscard]] LogOdds eval_logodds(const ModelSpec& model, std::span<const CategoryValue> y_history,
                                   std::span<const LogOdds> lambda_history);
[[nodiscard]] LogOdds eval_logodds(const ModelSpec& model, std::span<const CategoryValue> y_history,
                                   std::span<const LogOdds> lambda_history, const Eigen::VectorXd& z);

/// Design row (1, y_{t-1}', ..., y_{t-q}', z_t') of the covariate model.
[[nodiscard]] Eigen::VectorXd design_row(const CovariateLogistic& model, std::span<const CategoryValue> y_history,
                                         const Eigen::VectorXd* z);

/// A realized trajectory. lambda[t] is the log-odds that generated y[t].
struct SeriesPath {
    std::vector<CategoryValue> y;
    std::vector<LogOdds> lambda;
    std::optional<std::vector<Eigen::VectorXd>> z;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return y.size(); }
};

/// Pre-sample state, newest first.
struct InitialState {
    std::vector<CategoryValue> y_history;
    std::vector<LogOdds> lambda_history;
};

/// All-reference-category observations and zero log-odds.
[[nodiscard]] InitialState default_initial_state(const ModelSpec& model);

inline constexpr std::size_t kDefaultBurnIn = 1000;

/**
 * @brief Forward simulation: eval_logodds, softmax_link, sample_category.
 *
 * Runs burn_in + n steps and keeps the last n. One uniform draw per step from
 * Rng(seed). For the covariate model z_path[t] is the covariate at step t of
 * the full run (burn-in included), so z_path needs at least burn_in + n rows.
 */
[[nodiscard]] SeriesPath simulate(const ModelSpec& model, std::size_t n, std::size_t burn_in, std::uint64_t seed,
                                  const std::optional<InitialState>& init = std::nullopt,
                                  std::span<const Eigen::VectorXd> z_path = {});

/**
 * @brief Enumeration of E^q, the lagged-history state space.
 *
 * A history (u_1, ..., u_q), u_1 newest, has index sum_s (u_s - 1) N^{s-1}.
 */
class HistorySpace {
public:
    static constexpr std::size_t kMaxStates = 4096;

    HistorySpace(int n_categories, int q);

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] int n_categories() const noexcept { return n_categories_; }
    [[nodiscard]] int order() const noexcept { return q_; }

    [[nodiscard]] std::size_t encode(std::span<const CategoryValue> newest_first) const;
    [[nodiscard]] std::vector<CategoryValue> decode(std::size_t index) const;
    /// State reached from `from` when category `next` is observed.
    [[nodiscard]] std::size_t shift(std::size_t from, int next) const;

private:
    int n_categories_;
    int q_;
    std::size_t size_;
};

/**
 * @brief Transition matrix of the lagged-history chain on E^q.
 *
 * P((u_1..u_q), (v_1..v_q)) = Q((u), v_1) when v_{s+1} = u_s, else 0. Defined
 * for TruncatedLinear (q = L, no covariate) and CovariateLogistic (covariate
 * required when covariate_dim > 0). Throws when N^q exceeds
 * HistorySpace::kMaxStates.
 */
[[nodiscard]] Eigen::MatrixXd transition_matrix(const ModelSpec& model);
[[nodiscard]] Eigen::MatrixXd transition_matrix(const ModelSpec& model, const Eigen::VectorXd& z);

}  // namespace catts
